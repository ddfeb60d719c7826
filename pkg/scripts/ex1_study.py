"""The square-root example: value against quadrature, the non-revealing band,
and the law of the optimal posterior from the generic kernel and the exact sampler."""

import argparse

import numpy as np

from onesided.band import below_fraction, ex1_exact_sampler
from onesided.games import load_builtin
from onesided.kernel import build_kernel
from onesided.paths import estimate_value_mc, sample_paths
from onesided.pde import non_revealing_set
from onesided.simplex import make_grid
from onesided.solver import TimeGrid, closed_form_value, solve_backward


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=400)
    ap.add_argument("--m", type=int, default=400)
    ap.add_argument("--paths", type=int, default=20_000)
    ap.add_argument("--p0", type=float, default=0.28)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    spec = load_builtin("ex1")
    h1, h2 = spec.band
    tg = TimeGrid(0.0, 1.0, args.n)
    table = solve_backward(spec, tg, make_grid(2, args.m))

    print("value at t=0 against quadrature")
    for p1 in (0.1, 0.28, 0.5):
        print(f"  p1={p1:.2f}  V^tau={table.at(0.0, [p1, 1 - p1]):.6f}  exact={closed_form_value(spec, 0.0, [p1, 1 - p1]):.6f}")

    nrs = non_revealing_set(table, c=0.01)
    print("non-revealing band edges (grid) against h1, h2")
    for t in (0.0, 0.5, 0.9):
        k = tg.index_of(t)
        x = table.grid.points[nrs.at(k), 0]
        print(f"  t={t:.1f}  [{x[x < 0.5].max():.4f}, {x[x > 0.5].min():.4f}]  vs  [{h1(t):.4f}, {h2(t):.4f}]")

    p0 = [args.p0, 1 - args.p0]
    paths = sample_paths(build_kernel(table), p0, args.paths, args.seed)
    est = estimate_value_mc(paths, spec)
    print(f"MC of the running cost: {est.mean:.6f} +- {est.se:.1e}   V^tau = {table.values[0, paths.start]:.6f}")

    exact = ex1_exact_sampler(h1, h2, args.p0, tg.knots, args.paths, args.seed + 1, "ex1")
    print("P[lower half of the band]  generic / exact / two-point law")
    for t in (0.3, 0.5, 0.6, 0.75, 0.9):
        k = tg.index_of(t)
        mid = 0.5 * (h1(t) + h2(t))
        a = below_fraction(paths.coords(k + 1)[:, 0], mid).estimate
        b = below_fraction(exact.p[:, k], mid).estimate
        law = 1.0 if args.p0 < h1(t) else 1 - (args.p0 - h1(t)) / (h2(t) - h1(t))
        print(f"  t={t:.2f}  {a:.4f}  {b:.4f}  {law:.4f}")


if __name__ == "__main__":
    main()
