"""Band-edge process on h = 1/2 -+ sqrt(t): the Azema martingale.

Prints the one-step stay probability and the discrete structure-equation
residual as the time step shrinks.
"""

import argparse

import numpy as np

from onesided.band import azema_structure_residual, ex1_exact_sampler, stay_probability
from onesided.games import load_builtin


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--paths", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    h1, h2 = load_builtin("azema_h").band

    bp = ex1_exact_sampler(h1, h2, 0.5, np.linspace(0, 0.25, 26), args.paths, args.seed, "azema_h")
    q = stay_probability(bp, 0.01, 0.04, h1)
    print(f"stay on h1 from s=0.01 to t=0.04: {q.estimate:.4f} +- {q.se:.4f} (exact 0.75)")

    print(f"{'steps':>6} {'mean residual':>14} {'sd':>10} {'E[X]_T':>8} {'se':>7}  (E[X]_T = 0.25)")
    for steps in (50, 200, 800, 2000):
        bp = ex1_exact_sampler(h1, h2, 0.5, np.linspace(0, 0.25, steps + 1), args.paths, args.seed, "azema_h")
        rep = azema_structure_residual(bp)
        qv = rep.quadratic_variation
        print(f"{steps:6d} {rep.mean:14.2e} {rep.std:10.2e} {rep.qv_mean:8.4f} {qv.std() / np.sqrt(qv.size):7.4f}")


if __name__ == "__main__":
    main()
