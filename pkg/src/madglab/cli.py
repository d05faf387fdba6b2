"""Command-line front door.

Subcommands: gen-data, train, verify-theory, bound, ablate, plot.
Exit codes: 0 success, 1 validation/usage, 2 runtime failure,
3 theory violation detected.
"""

import argparse
import os
import sys

import numpy as np

from . import bounds, oracle
from .data import SyntheticSpec, generate, load_csv, save_csv
from .models import load_checkpoint, save_checkpoint
from .training import (TrainConfig, da_train, erm_train, evaluate, madg_train,
                       write_metrics_csv)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2
EXIT_VIOLATION = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _load_config_file(path):
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            values[key.replace("-", "_")] = value
    return values


def _apply_config_file(args, parser, argv):
    """File values fill flags the command line left at their defaults."""
    if not getattr(args, "config", None):
        return
    file_values = _load_config_file(args.config)
    explicit = {a.lstrip("-").split("=")[0].replace("-", "_")
                for a in argv if a.startswith("--")}
    applied = []
    for key, raw in file_values.items():
        if not hasattr(args, key) or key in explicit:
            continue
        current = getattr(args, key)
        cast = type(current) if current is not None else str
        setattr(args, key, cast(raw) if cast is not bool
                else raw.lower() in ("1", "true", "yes"))
        applied.append(key)
    if applied:
        print(f"config precedence: flags > {args.config} > defaults "
              f"(from file: {', '.join(applied)})")


def _floats(text):
    return [float(v) for v in text.split(",")]


def _train_config(args, seed=None):
    return TrainConfig(
        learning_rate=args.lr, momentum=args.momentum,
        weight_decay=args.weight_decay, rho_hat=args.rho_hat,
        epochs=args.epochs, batch_per_domain=args.batch_per_domain,
        weight_scheme=args.weight_scheme, pair_scheme=args.pair_scheme,
        grl_eta=args.grl_eta, grl_schedule=args.grl_schedule,
        lr_schedule=args.lr_schedule,
        seed=args.seed if seed is None else seed,
    )


def _add_train_flags(p):
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--weight-decay", type=float, default=0.0)
    p.add_argument("--rho-hat", type=float, default=1.5)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--batch-per-domain", type=int, default=32)
    p.add_argument("--weight-scheme", default="one",
                   choices=["one", "average", "dynamic"])
    p.add_argument("--pair-scheme", default="full",
                   choices=["full", "reduced"])
    p.add_argument("--grl-eta", type=float, default=1.0)
    p.add_argument("--grl-schedule", default="constant",
                   choices=["constant", "ramp"])
    p.add_argument("--lr-schedule", default="constant",
                   choices=["constant", "inverse_decay"])
    p.add_argument("--seed", type=int, default=0)


def build_parser():
    parser = _Parser(prog="madglab")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", parents=[], help="write synthetic domains")
    p.add_argument("--kind", required=True,
                   choices=["two_moons", "colored", "gaussian_shift"])
    p.add_argument("--domains", required=True,
                   help="comma-separated per-domain parameter values")
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--label-noise", type=float, default=0.25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default=".")
    p.add_argument("--config")

    p = sub.add_parser("train", help="train madg / erm / da")
    p.add_argument("--algo", default="madg", choices=["madg", "erm", "da"])
    p.add_argument("--sources", required=True,
                   help="comma-separated source CSV paths")
    p.add_argument("--holdout", help="held-out evaluation CSV")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--config")
    _add_train_flags(p)

    p = sub.add_parser("verify-theory", help="run the exact oracle suites")
    p.add_argument("--instances", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid", type=int, default=4)
    p.add_argument("--out", default="violations.csv")
    p.add_argument("--corrupt", action="store_true",
                   help=argparse.SUPPRESS)  # self-test hook
    p.add_argument("--config")

    p = sub.add_parser("bound", help="emit a bound report for a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--sources", required=True)
    p.add_argument("--holdout", required=True)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--rho-hat", type=float, default=1.5)
    p.add_argument("--out", default="bound_report.txt")
    p.add_argument("--config")

    p = sub.add_parser("ablate", help="sweep one axis over values x seeds")
    p.add_argument("--axis", required=True,
                   choices=["rho-hat", "pair-scheme", "weight-scheme"])
    p.add_argument("--values", required=True)
    p.add_argument("--seeds", default="0,1,2")
    p.add_argument("--sources", required=True)
    p.add_argument("--holdout", required=True)
    p.add_argument("--out", default="ablation.csv")
    p.add_argument("--config")
    _add_train_flags(p)

    p = sub.add_parser("plot", help="render metrics / summary CSVs as SVG")
    p.add_argument("--metrics", help="comma-separated metrics CSV paths")
    p.add_argument("--summary", help="ablation summary CSV")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--config")
    return parser


# ---- commands ---------------------------------------------------------------


def cmd_gen_data(args):
    params = _floats(args.domains)
    if args.kind == "colored":
        for c in params:
            if not 0.0 <= c <= 1.0:
                raise UsageError(f"--domains: correlation {c} outside [0, 1]")
    spec = SyntheticSpec(kind=args.kind, domain_params=tuple(params),
                         n_per_domain=args.n, label_noise=args.label_noise,
                         seed=args.seed)
    datasets = generate(spec)
    os.makedirs(args.out_dir, exist_ok=True)
    for ds in datasets:
        path = os.path.join(args.out_dir, f"{args.kind}_domain{ds.domain_id}.csv")
        save_csv([ds], path)
        print(f"domain {ds.domain_id}: {ds.n} samples -> {path}")
    return EXIT_OK


def _load_sources(args):
    datasets = []
    for path in args.sources.split(","):
        datasets.extend(load_csv(path))
    return datasets


def cmd_train(args):
    sources = _load_sources(args)
    if args.algo in ("madg", "da") and len(sources) < 2:
        raise UsageError(f"{args.algo} needs at least 2 source domains")
    holdout = load_csv(args.holdout) if args.holdout else []
    eval_sets = sources + holdout
    config = _train_config(args)

    if args.algo == "madg":
        model, history = madg_train(sources, config, eval_sets=eval_sets)
    elif args.algo == "erm":
        model, history = erm_train(sources, config, eval_sets=eval_sets)
    else:
        target = holdout[0] if holdout else sources[-1]
        labeled = sources if not holdout else sources
        model, history = da_train(labeled, target, config,
                                  eval_sets=eval_sets)

    os.makedirs(args.out_dir, exist_ok=True)
    metrics_path = os.path.join(args.out_dir, f"metrics_{args.algo}.csv")
    ckpt_path = os.path.join(args.out_dir, f"model_{args.algo}.ckpt")
    write_metrics_csv(history, metrics_path, model.pair_index.j,
                      len(eval_sets))
    save_checkpoint(model, ckpt_path)
    print("final accuracy per domain:")
    for idx, ds in enumerate(eval_sets):
        role = "holdout" if idx >= len(sources) else "source"
        print(f"  domain {ds.domain_id} ({role}): {evaluate(model, ds):.4f}")
    print(f"metrics -> {metrics_path}\ncheckpoint -> {ckpt_path}")
    return EXIT_OK


def cmd_verify_theory(args):
    results = oracle.run_check_suite(num_instances=args.instances,
                                     seed=args.seed,
                                     grid_resolution=args.grid)
    if args.corrupt:
        # harness self-test: force a fake violation into the report
        results = list(results)
        results.append(oracle.CheckResult("corrupted", args.seed, 1.0, 0.0))
    oracle.write_violation_report(results, args.out)
    violations = [r for r in results if r.violated]
    print(f"{len(results)} checks, {len(violations)} violations -> {args.out}")
    return EXIT_VIOLATION if violations else EXIT_OK


def cmd_bound(args):
    model = load_checkpoint(args.checkpoint)
    sources = _load_sources(args)
    holdout = load_csv(args.holdout)[0]
    rho = float(np.log(args.rho_hat))

    js_values = [bounds.js_divergence_samples(holdout.X, s.X) for s in sources]
    gamma = bounds.gamma_from_divergences(js_values)
    pair_values = bounds.network_pair_surrogates(model, sources,
                                                 args.rho_hat)
    eps_hat = max(pair_values.values())
    argmax_pair = max(pair_values, key=pair_values.get)

    from .margins import margin_error
    errors, sizes = [], []
    for ds in sources:
        from .autodiff import Tape
        tape = Tape()
        scores = model.main_scores(tape, model.features(tape, ds.X))
        errors.append(margin_error(scores.data, ds.y, rho))
        sizes.append(ds.n)
    pi = np.full(len(sources), 1.0 / len(sources))

    report = bounds.assemble_bound_report(
        pi=pi, source_margin_errors=errors,
        epsilon_hat_max_value=eps_hat,
        epsilon_provenance="estimated (lower bound of sup)",
        gamma_value=gamma, gamma_provenance="estimated (JS protocol)",
        rad_pi_hf=(0.0, 0.0), rad_pi_hf_provenance="unavailable",
        rad_pi_1f_per_source=[0.0] * len(sources),
        rad_pi_1f_provenance="unavailable",
        num_classes=model.config.num_classes, rho=rho, delta=args.delta,
        sample_sizes=sizes, argmax_pair=argmax_pair)
    report.omitted.append("network Rademacher terms (no enumerated class)")

    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("pairwise_js = " + ", ".join(repr(v) for v in js_values) + "\n")
        fh.write(report.serialize())
    print(f"bound report -> {args.out}")
    return EXIT_OK


def cmd_ablate(args):
    sources = _load_sources(args)
    holdout = load_csv(args.holdout)[0]
    values = args.values.split(",")
    seeds = [int(s) for s in args.seeds.split(",")]
    rows = []
    for value in values:
        for seed in seeds:
            config = _train_config(args, seed=seed)
            from dataclasses import replace
            if args.axis == "rho-hat":
                config = replace(config, rho_hat=float(value))
            elif args.axis == "pair-scheme":
                config = replace(config, pair_scheme=value)
            else:
                config = replace(config, weight_scheme=value)
            model, history = madg_train(sources, config, eval_sets=[holdout])
            acc = evaluate(model, holdout)
            final = history[-1]
            if not (np.isfinite(final.classification_loss)
                    and np.isfinite(final.transfer_loss)):
                raise RuntimeError(f"non-finite loss at {args.axis}={value}")
            rows.append((value, seed, acc))
            print(f"{args.axis}={value} seed={seed}: holdout acc {acc:.4f}")
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("axis_value,seed,holdout_accuracy\n")
        for value, seed, acc in rows:
            fh.write(f"{value},{seed},{acc!r}\n")
    print(f"summary -> {args.out}")
    return EXIT_OK


def cmd_plot(args):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    os.makedirs(args.out_dir, exist_ok=True)
    written = []
    if args.metrics:
        fig, ax = plt.subplots(figsize=(7, 4))
        for path in args.metrics.split(","):
            rows = _read_csv_rows(path)
            steps = [float(r["step"]) for r in rows]
            ax.plot(steps, [float(r["loss_cls"]) for r in rows],
                    label=f"{os.path.basename(path)} cls")
            ax.plot(steps, [float(r["loss_transfer"]) for r in rows],
                    label=f"{os.path.basename(path)} transfer", linestyle="--")
        ax.set_xlabel("step")
        ax.set_ylabel("loss")
        ax.legend(fontsize=7)
        out = os.path.join(args.out_dir, "loss_curves.svg")
        fig.savefig(out, format="svg")
        plt.close(fig)
        written.append(out)
    if args.summary:
        rows = _read_csv_rows(args.summary)
        by_value = {}
        for r in rows:
            by_value.setdefault(r["axis_value"], []).append(
                float(r["holdout_accuracy"]))
        fig, ax = plt.subplots(figsize=(6, 4))
        labels = list(by_value)
        means = [np.mean(by_value[v]) for v in labels]
        ax.bar(range(len(labels)), means, tick_label=labels)
        ax.set_ylabel("holdout accuracy")
        out = os.path.join(args.out_dir, "accuracy_vs_axis.svg")
        fig.savefig(out, format="svg")
        plt.close(fig)
        written.append(out)
    if not written:
        raise UsageError("plot needs --metrics and/or --summary")
    for path in written:
        print(f"plot -> {path}")
    return EXIT_OK


def _read_csv_rows(path):
    import csv

    with open(path, encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return rows


_COMMANDS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "verify-theory": cmd_verify_theory,
    "bound": cmd_bound,
    "ablate": cmd_ablate,
    "plot": cmd_plot,
}


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _apply_config_file(args, parser, argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
