"""Inspect the spectral quantities that drive the convergence theory.

Builds one row-sketch family, prints its spectral report, the rates it
predicts for a few relaxation weights, the expected-loss sandwich
constants for several sampling rules, and finishes with a randomized
check of the inequalities everything above relies on.
"""

import numpy as np

import sketchdescent as skd


def main():
    rng = np.random.default_rng(19)
    A = rng.standard_normal((100, 20))
    x_star = rng.standard_normal(20)
    system = skd.LinearSystem(A=A, b=A @ x_star, x_star=x_star)
    family = skd.SketchFamily("row", system)

    report = skd.spectral_report(family)
    print(report.to_text())

    print("\npredicted one-step contraction factors")
    print(f"{'omega':>6} {'step factor':>12} {'f decay':>10}")
    for omega in (0.5, 1.0, 1.5):
        rates = skd.predicted_rates(report, omega=omega)
        print(f"{omega:>6.1f} {rates.step_factor:>12.6f} "
              f"{rates.fdecay_factor:>10.6f}")

    print("\nexpected-selected-loss sandwich (lo, hi) by rule")
    for rule in (skd.uniform(), skd.greedy(5), skd.max_distance(),
                 skd.capped(0.5, 1, None)):
        lo, hi = skd.theory.sandwich_constants(
            report.tsum_eig_min_pos, report.tsum_eig_max, report.mu_hi,
            family.q, rule, 0)
        print(f"  {rule.label:<12} lo {lo:.6f}   hi {hi:.6f}")

    check = skd.verify_inequalities(family, trials=200, seed=1)
    print(f"\ninequality check: {'all passed' if check.all_passed else 'FAILED'}"
          f" ({len(check.entries)} trackers, {check.trials} trials)")


if __name__ == "__main__":
    main()
