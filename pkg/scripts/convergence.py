"""Error of V^tau against the closed forms as the time and simplex grids are refined."""

import argparse

import numpy as np

from onesided.games import load_builtin
from onesided.simplex import make_grid
from onesided.solver import TimeGrid, closed_form_value, solve_backward


def max_error(name, n, m, t=0.0):
    spec = load_builtin(name)
    table = solve_backward(spec, TimeGrid(0.0, spec.horizon, n), make_grid(spec.dim, m))
    k = table.tgrid.index_of(t)
    pts = table.grid.points[:: max(1, table.grid.size // 200)]
    exact = np.array([closed_form_value(spec, t, p) for p in pts])
    approx = table.grid.interpolate(table.values[k], pts)
    return float(np.abs(approx - exact).max())


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--fixture", default="ex1", choices=["reveal", "ex1", "autonomous3"])
    ap.add_argument("--levels", type=int, default=5)
    args = ap.parse_args()
    m0 = 12 if args.fixture == "autonomous3" else 50
    print(f"{'n':>6} {'m':>6} {'max error':>12} {'ratio':>7}")
    prev = None
    for j in range(args.levels):
        n = m = m0 * 2**j
        if args.fixture == "autonomous3" and m > 96:
            break
        err = max_error(args.fixture, n, m)
        ratio = "" if prev is None or err == 0 else f"{prev / err:7.2f}"
        print(f"{n:6d} {m:6d} {err:12.3e} {ratio}")
        prev = err


if __name__ == "__main__":
    main()
