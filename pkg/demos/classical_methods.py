"""The classical solvers as corners of one sketched-descent family.

On a single SPD problem this script shows that
  * full sketches with unit relaxation reproduce steepest descent,
  * row sketches in the system's own geometry give coordinate descent,
  * the momentum variant with exact line-search parameters reproduces
    conjugate gradients and stops within n iterations.
"""

import numpy as np

import sketchdescent as skd


def build_spd(n=40, seed=3):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((3 * n, n)) / np.sqrt(3 * n)
    A = M.T @ M
    A = 0.5 * (A + A.T)
    x_star = rng.standard_normal(n)
    return A, A @ x_star, x_star


def main():
    A, b, x_star = build_spd()
    n = A.shape[0]
    tol = 1e-10

    steepest = skd.LinearSystem(A=A, b=b, x_star=x_star, B=A)
    cfg = skd.SolverConfig(tol=tol, max_iters=50_000, x0="ones1000")

    sd = skd.run_sd(steepest, cfg)
    full = skd.run_ssd(steepest, skd.SketchFamily("full", steepest),
                       skd.uniform(), cfg)
    gap = np.linalg.norm(sd.x_final - full.x_final)
    print(f"steepest descent        {sd.iterations:>6} iterations")
    print(f"full sketch, omega=1    {full.iterations:>6} iterations"
          f"   (iterate gap {gap:.2e})")

    coord = skd.LinearSystem(A=A, b=b, x_star=x_star, B=A, G=A)
    cd = skd.run_ssd(coord, skd.SketchFamily("row", coord),
                     skd.max_distance(), cfg)
    print(f"greedy coordinate descent {cd.iterations:>4} iterations")

    cg_cfg = skd.SolverConfig(x0="zero", tol=1e-10 * np.linalg.norm(b),
                              max_iters=10 * n)
    cg = skd.run_cg_momentum(skd.LinearSystem(A=A, b=b, x_star=x_star),
                             cg_cfg)
    print(f"conjugate gradients     {cg.iterations:>6} iterations"
          f"   (n = {n}, residual {cg.final_residual():.2e})")


if __name__ == "__main__":
    main()
