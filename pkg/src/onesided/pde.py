"""Residual diagnostics for a solved value table: the obstacle problem, the
non-revealing set and the Hamilton-Jacobi equation of the conjugate value.

None of these feed back into the solver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, GeometryError
from .games import lipschitz_estimate
from .simplex import fenchel_conjugate, min_second_differences
from .solver import ValueTable


def time_residuals(table: ValueTable) -> np.ndarray:
    """``(V(t_{k+1}) - V(t_k)) / tau + H(t_k, node)`` for all k < n, shape (n, N)."""
    return np.diff(table.values, axis=0) / table.tgrid.tau + table.H


def obstacle_residual(table: ValueTable, k: int, node: int) -> tuple[float, float]:
    """(time residual, convexity residual) at one knot and node.

    The convexity part is NaN at vertices; other boundary nodes are rejected.
    """
    n = table.tgrid.n
    if not 0 <= k < n:
        raise DomainError(f"knot index {k} outside [0, {n})")
    grid = table.grid
    tr = (table.values[k + 1, node] - table.values[k, node]) / table.tgrid.tau + table.H[k, node]
    if node in grid.vertex_ids:
        return float(tr), float("nan")
    if grid.on_boundary[node]:
        raise GeometryError(f"node {node} is on the simplex boundary; convexity stencil undefined")
    cr = min_second_differences(grid, table.values[k])[node]
    return float(tr), float(cr)


@dataclass(frozen=True, eq=False)
class NonRevealingSet:
    members: np.ndarray  # (n, N) bool
    threshold: float  # c * (tau + 1/m)
    c: float

    def at(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.members[k])

    def __contains__(self, item) -> bool:
        k, node = item
        return bool(self.members[k, node])


def default_threshold_constant(table: ValueTable) -> float:
    return 5.0 * lipschitz_estimate(table.H, table.grid)


def non_revealing_set(table: ValueTable, c: float | None = None) -> NonRevealingSet:
    """Nodes where the value moves by the plain HJ equation, up to ``c (tau + 1/m)``."""
    if c is None:
        c = default_threshold_constant(table)
    thr = c * (table.tgrid.tau + 1.0 / table.grid.m)
    members = time_residuals(table) <= thr
    members[:, table.grid.vertex_ids] = True
    return NonRevealingSet(members, thr, c)


@dataclass(frozen=True, eq=False)
class ConjugateResidual:
    axis: np.ndarray
    knots: np.ndarray  # knot indices k where the residual was evaluated
    residual: np.ndarray  # (len(knots), *dual shape); NaN outside the interior
    mask: np.ndarray  # True where the discrete gradient is treated as single-valued
    terminal_error: float

    @property
    def masked_fraction(self) -> float:
        interior = ~np.isnan(self.residual)
        return 1.0 - float(self.mask[interior].sum()) / max(1, int(interior.sum()))

    @property
    def max_abs(self) -> float:
        r = self.residual[self.mask]
        return float(np.abs(r).max()) if r.size else 0.0


def conjugate_pde_residual(
    table: ValueTable,
    half_width: float | None = None,
    resolution: int | None = None,
    knots=None,
) -> ConjugateResidual:
    """Residual of ``w_t - H(t, grad w) = 0`` for the conjugate of the value table.

    Time derivative by forward difference, gradient by central differences;
    nodes where central and one-sided gradients disagree by more than 10/m
    are masked as kinks. ``knots`` defaults to eight evenly spaced k < n.
    """
    grid, tg, spec = table.grid, table.tgrid, table.spec
    if half_width is None:
        half_width = float(np.abs(table.H).max()) * (tg.T - tg.t0) + 1.0
    if resolution is None:
        resolution = grid.m
    if knots is None:
        knots = np.unique(np.linspace(0, tg.n - 1, 8).round().astype(int))
    knots = np.asarray(knots, dtype=int)
    dim = grid.dim
    term = fenchel_conjugate(grid, table.values[tg.n], half_width, resolution)
    Q = term.points().reshape(term.values.shape + (dim,))
    terminal_error = float(np.abs(term.values - Q.max(axis=-1)).max())

    h = term.spacing
    inner = (slice(1, -1),) * dim
    shape = (len(knots),) + term.values.shape
    residual = np.full(shape, np.nan)
    mask = np.zeros(shape, dtype=bool)
    for j, k in enumerate(knots):
        now = fenchel_conjugate(grid, table.values[k], half_width, resolution).values
        nxt = fenchel_conjugate(grid, table.values[k + 1], half_width, resolution).values
        dt = (nxt - now) / tg.tau
        grads, ok = [], np.ones(tuple(s - 2 for s in now.shape), dtype=bool)
        for ax in range(dim):
            fwd = (np.roll(now, -1, axis=ax) - now)[inner] / h
            bwd = (now - np.roll(now, 1, axis=ax))[inner] / h
            cen = 0.5 * (fwd + bwd)
            ok &= np.maximum(np.abs(cen - fwd), np.abs(cen - bwd)) <= 10.0 / grid.m
            grads.append(cen)
        G = np.clip(np.stack(grads, axis=-1).reshape(-1, dim), 0.0, None)
        G /= G.sum(axis=1, keepdims=True)
        Hg = spec.H(tg.knots[k], G).reshape(ok.shape)
        residual[(j,) + inner] = dt[inner] - Hg
        mask[(j,) + inner] = ok
    return ConjugateResidual(term.axis, knots, residual, mask, terminal_error)
