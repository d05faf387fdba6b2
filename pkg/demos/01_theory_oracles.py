"""Machine-check the generalization theory on random finite instances.

Every inequality the library relies on (target-error decomposition, hull
discrepancy control, and the per-mixture unseen-domain bounds) is evaluated
exactly by brute force: domains are finite discrete distributions and the
scorer class is an explicit table, so expectations and suprema are sums and
maxima, not estimates. A violation here would mean the implementation
disagrees with the theory, to machine precision.
"""

import numpy as np

from madglab.oracle import (
    DiscreteDomain,
    FiniteClass,
    check_lemma1,
    check_theorem1,
    check_theorem2_per_pi,
    exact_mdd,
    hull_projection,
    run_check_suite,
)


def hand_built_instance():
    # Three inputs, two classes, two source domains and one unseen domain
    # that is deliberately outside the source hull.
    cls = FiniteClass(np.array([
        [[2.0, 0.0], [0.0, 2.0], [1.0, 1.0]],
        [[0.0, 2.0], [2.0, 0.0], [2.0, 0.0]],
        [[1.0, 0.5], [0.5, 1.0], [0.0, 2.0]],
    ]))
    f_table = cls.tables[0]
    sources = [
        DiscreteDomain(np.array([0, 1]), np.array([0, 1]),
                       np.array([0.7, 0.3])),
        DiscreteDomain(np.array([0, 2]), np.array([0, 1]),
                       np.array([0.4, 0.6])),
    ]
    unseen = DiscreteDomain(np.array([1, 2]), np.array([1, 0]),
                            np.array([0.5, 0.5]))
    return cls, f_table, sources, unseen


def main():
    rho = 0.5
    cls, f_table, sources, unseen = hand_built_instance()

    print("== one hand-built instance ==")
    result = check_lemma1(cls, f_table, np.array([0.5, 0.5]),
                          sources, sources[0], rho)
    print(f"lemma1  lhs={result.lhs:.6f}  rhs={result.rhs:.6f}  "
          f"slack={result.slack:.6f}  violated={result.violated}")

    result = check_theorem1(cls, f_table, np.array([0.5, 0.5]),
                            sources, sources[1], rho)
    print(f"theorem1  lhs={result.lhs:.6f}  rhs={result.rhs:.6f}  "
          f"violated={result.violated}")

    # The hull projection finds the source mixture closest (in MDD) to the
    # unseen domain; the residual discrepancy is gamma.
    pi, gamma = hull_projection(cls, f_table, unseen, sources, rho,
                                resolution=16)
    print(f"hull projection: pi={np.round(pi, 3)}  gamma={gamma:.6f}")
    print(f"raw MDD to source 0: "
          f"{exact_mdd(cls, f_table, sources[0], unseen, rho):.6f}")

    result = check_theorem2_per_pi(cls, f_table, pi, sources, unseen, rho)
    print(f"theorem2 at projected pi  lhs={result.lhs:.6f}  "
          f"rhs={result.rhs:.6f}  violated={result.violated}")

    print()
    print("== randomized suite (50 instances, 4 checks each) ==")
    results = run_check_suite(num_instances=50, seed=0, grid_resolution=4)
    violations = [r for r in results if r.violated]
    worst = min(r.slack for r in results)
    print(f"checks run: {len(results)}")
    print(f"violations: {len(violations)}")
    print(f"tightest slack: {worst:.3e}")


if __name__ == "__main__":
    main()
