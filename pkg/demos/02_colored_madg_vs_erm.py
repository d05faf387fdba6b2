"""Adversarial margin training beats pooled ERM under spurious correlation.

The colored synthetic suite plants a color feature that agrees with the
label 90% and 80% of the time in the two source domains but only 10% of the
time in the held-out domain. A pooled-source ERM learner happily keys on the
color shortcut and collapses on the held-out domain; the minimax learner's
auxiliary heads penalize features whose induced labels disagree across
domains, pushing the extractor toward the shape feature that transfers.
"""

from madglab.data import SyntheticSpec, generate
from madglab.training import TrainConfig, erm_train, madg_train


def run(seed):
    spec = SyntheticSpec(kind="colored", domain_params=(0.9, 0.8, 0.1),
                         n_per_domain=2000, seed=seed)
    domains = generate(spec)
    sources, held_out = domains[:2], domains[2]

    config = TrainConfig(seed=seed)
    madg_model, _ = madg_train(sources, config, eval_sets=[held_out])
    erm_model, _ = erm_train(sources, config, eval_sets=[held_out])

    from madglab.training import evaluate
    return evaluate(madg_model, held_out), evaluate(erm_model, held_out)


def main():
    print(f"{'seed':>4}  {'minimax':>8}  {'erm':>8}  {'gap':>7}")
    gaps = []
    for seed in range(3):
        madg_acc, erm_acc = run(seed)
        gaps.append(madg_acc - erm_acc)
        print(f"{seed:>4}  {madg_acc:8.3f}  {erm_acc:8.3f}  "
              f"{madg_acc - erm_acc:+7.3f}")
    print(f"mean gap: {sum(gaps) / len(gaps):+.3f}")


if __name__ == "__main__":
    main()
