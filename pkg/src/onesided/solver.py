"""Backward convexification ``V(t_k) = Vex(V(t_{k+1}) + tau H(t_k))`` and closed-form values."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, GeometryError, SpecError
from .games import GameSpec
from .simplex import SimplexGrid, convex_envelope, simplex_point


@dataclass(frozen=True)
class TimeGrid:
    t0: float
    T: float
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("time grid needs n >= 1 steps")
        if not self.T > self.t0:
            raise ValueError("time grid needs T > t0")

    @property
    def tau(self) -> float:
        return (self.T - self.t0) / self.n

    @cached_property
    def knots(self) -> np.ndarray:
        return self.t0 + self.tau * np.arange(self.n + 1)

    def index_of(self, t: float) -> int:
        k = int(round((t - self.t0) / self.tau))
        if not 0 <= k <= self.n or abs(self.knots[k] - t) > 1e-9 * max(1.0, abs(t)):
            raise DomainError(f"t={t} is not a knot of the time grid")
        return k


@dataclass(frozen=True, eq=False)
class ValueTable:
    spec: GameSpec
    tgrid: TimeGrid
    grid: SimplexGrid
    values: np.ndarray  # (n+1, N)
    H: np.ndarray  # (n, N), H(t_k, node)
    split_ids: np.ndarray  # (n, N, dim), -1 padded
    split_w: np.ndarray  # (n, N, dim)
    active: np.ndarray  # (n, N)

    def at(self, t: float, p) -> float:
        """V^tau at a knot ``t``, interpolated in ``p``."""
        k = self.tgrid.index_of(t)
        return self.grid.interpolate(self.values[k], simplex_point(p, self.grid.dim))

    def slice(self, t: float) -> np.ndarray:
        return self.values[self.tgrid.index_of(t)]

    @property
    def scale(self) -> float:
        return max(1.0, float(np.abs(self.values).max()))


def solve_backward(spec: GameSpec, tgrid: TimeGrid, grid: SimplexGrid) -> ValueTable:
    if spec.kind == "band":
        raise SpecError(f"fixture {spec.name!r} has no Hamiltonian to solve")
    if spec.dim != grid.dim:
        raise GeometryError(f"spec has dimension {spec.dim} but grid has {grid.dim}")
    if abs(tgrid.T - spec.horizon) > 1e-12:
        raise SpecError(f"time grid ends at {tgrid.T}, spec horizon is {spec.horizon}")
    n, N = tgrid.n, grid.size
    H = spec.H_table(tgrid.knots[:-1], grid.points)
    values = np.zeros((n + 1, N))
    split_ids = np.empty((n, N, grid.dim), dtype=np.int32)
    split_w = np.empty((n, N, grid.dim))
    active = np.empty((n, N), dtype=bool)
    tau = tgrid.tau
    for k in range(n - 1, -1, -1):
        env = convex_envelope(grid, values[k + 1] + tau * H[k])
        values[k] = env.values
        ids, w = env.node_splits()
        split_ids[k], split_w[k], active[k] = ids, w, env.active
    return ValueTable(spec, tgrid, grid, values, H, split_ids, split_w, active)


# ---------------------------------------------------------------- closed forms


def _gauss_legendre(f, a: float, b: float, panels: int = 16, order: int = 12) -> float:
    if b <= a:
        return 0.0
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    s = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    return float(np.sum(np.repeat(half, order) * np.tile(w, panels) * f(s)))


def ex1_vex_h(spec: GameSpec, s, p1: float) -> np.ndarray:
    """Convexified Hamiltonian of the ex1 fixture at times ``s`` for the point (p1, 1-p1)."""
    h1, _ = spec.band
    s = np.atleast_1d(np.asarray(s, dtype=float))
    q = min(p1, 1.0 - p1)
    edge = np.minimum(q, h1(s))
    P = np.column_stack([edge, 1.0 - edge])
    alpha = spec.params["alpha"](s)
    return -np.abs(P[:, 0] - P[:, 1]) + alpha * np.sqrt(P[:, 0] ** 2 + P[:, 1] ** 2)


def closed_form_value(spec: GameSpec, t: float, p) -> float:
    """Exact value V(t, p) for the fixtures that have one."""
    p = simplex_point(p, spec.dim)
    T = spec.horizon
    if not 0 <= t <= T + 1e-12:
        raise DomainError(f"t={t} outside [0, {T}]")
    if spec.name == "reveal":
        return (T - t) * (1.0 - p[0])
    if spec.name == "autonomous3":
        return (T - t) * p[2]
    if spec.name == "counterexample":
        a, b = spec.params["a"], spec.params["b"]
        if t <= a:
            return 0.0
        if t >= b:
            return float(spec.params["Lam"](t)) * p[0] * p[1]
        raise DomainError(f"no closed form for the counterexample on ({a}, {b})")
    if spec.name == "ex1" and spec.kind == "hamiltonian":
        h1, _ = spec.band
        q = min(p[0], p[1])
        # q leaves the strictly convex region once h1(s) drops to q
        if q >= h1(t):
            s_star = t
        elif q <= h1(T):
            s_star = T
        else:
            s_star = brentq(lambda s: h1(s) - q, t, T, xtol=1e-15)
        f = lambda s: ex1_vex_h(spec, s, p[0])  # noqa: E731
        return _gauss_legendre(f, t, s_star) + _gauss_legendre(f, s_star, T)
    raise DomainError(f"no closed form registered for fixture {spec.name!r}")
