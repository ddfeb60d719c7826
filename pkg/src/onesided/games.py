"""Game specifications, the Isaacs Hamiltonian and the builtin fixtures."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import SpecError
from .simplex import simplex_point


@dataclass(frozen=True, eq=False)
class ActionGrid:
    u_values: np.ndarray
    v_values: np.ndarray

    def __post_init__(self):
        for name in ("u_values", "v_values"):
            a = np.asarray(getattr(self, name), dtype=float)
            if a.ndim != 1 or a.size == 0:
                raise SpecError(f"{name} must be a nonempty 1-d list of actions")
            if len(np.unique(a)) != a.size:
                raise SpecError(f"{name} contains duplicate actions")
            object.__setattr__(self, name, a)


@dataclass(frozen=True)
class SaddleResult:
    value: float
    u: float | None
    v: float | None
    isaacs_gap: float
    u_index: int | None = None
    v_index: int | None = None


@dataclass(frozen=True, eq=False)
class GameSpec:
    """A zero-sum game with lack of information on one side.

    Exactly one of ``payoff`` (with ``actions``) or ``hamiltonian`` is set,
    except for band-only fixtures which carry just ``band``.

    payoff(t, u, v) returns the ``dim`` payoffs, broadcasting over ``u`` of
    shape (nu, 1) and ``v`` of shape (1, nv). hamiltonian(t, P) and
    saddle_u(t, P) are vectorized over the rows of ``P``.
    """

    name: str
    dim: int
    horizon: float
    actions: ActionGrid | None = None
    payoff: Callable | None = None
    hamiltonian: Callable | None = None
    saddle_u: Callable | None = None
    band: tuple[Callable, Callable] | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.horizon > 0:
            raise SpecError("horizon T must be positive")
        if self.payoff is not None and self.actions is None:
            raise SpecError("payoff-based specs need an action grid")

    @property
    def kind(self) -> str:
        if self.payoff is not None:
            return "payoff"
        if self.hamiltonian is not None:
            return "hamiltonian"
        return "band"

    def payoff_tensor(self, t: float) -> np.ndarray:
        """Payoffs on the action grid, shape (dim, nu, nv)."""
        if self.payoff is None:
            raise SpecError(f"spec {self.name!r} is not payoff-based")
        u = self.actions.u_values[:, None]
        v = self.actions.v_values[None, :]
        shape = (len(self.actions.u_values), len(self.actions.v_values))
        parts = self.payoff(t, u, v)
        return np.stack([np.broadcast_to(np.asarray(x, dtype=float), shape) for x in parts])

    def H(self, t: float, P) -> np.ndarray:
        P = np.atleast_2d(np.asarray(P, dtype=float))
        if self.kind == "payoff":
            return saddle_indices(self, t, P)[0]
        if self.kind == "hamiltonian":
            return np.asarray(self.hamiltonian(t, P), dtype=float)
        raise SpecError(f"fixture {self.name!r} only defines a band, not a Hamiltonian")

    def H_table(self, times, points) -> np.ndarray:
        return np.stack([self.H(t, points) for t in times])

    def control_table(self, times, points) -> np.ndarray:
        """u*(t_k, p) on every (knot, point); action indices for payoff specs."""
        if self.kind == "payoff":
            return np.stack([saddle_indices(self, t, points)[1] for t in times])
        if self.saddle_u is None:
            raise SpecError(f"spec {self.name!r} has no saddle control u*")
        return np.stack([np.asarray(self.saddle_u(t, points), dtype=float) for t in times])


def saddle_indices(spec: GameSpec, t: float, P: np.ndarray):
    """Vectorized min-max: value, argmin u index and best-reply v index per row."""
    L = spec.payoff_tensor(t)
    A = np.einsum("mi,iuv->muv", P, L)
    row_max = A.max(axis=2)
    u_idx = np.argmin(row_max, axis=1)
    value = row_max[np.arange(len(P)), u_idx]
    v_idx = np.argmax(A[np.arange(len(P)), u_idx], axis=1)
    return value, u_idx, v_idx


def eval_hamiltonian(spec: GameSpec, t: float, p) -> SaddleResult:
    p = simplex_point(p, spec.dim)
    if spec.kind == "payoff":
        A = np.einsum("i,iuv->uv", p, spec.payoff_tensor(t))
        row_max = A.max(axis=1)
        ui = int(np.argmin(row_max))
        vi = int(np.argmax(A[ui]))
        minmax = float(row_max[ui])
        maxmin = float(A.min(axis=0).max())
        acts = spec.actions
        return SaddleResult(minmax, float(acts.u_values[ui]), float(acts.v_values[vi]), minmax - maxmin, ui, vi)
    if spec.kind == "hamiltonian":
        value = float(spec.H(t, p)[0])
        u = float(spec.saddle_u(t, p[None])[0]) if spec.saddle_u is not None else None
        return SaddleResult(value, u, None, 0.0)
    raise SpecError(f"fixture {spec.name!r} has no Hamiltonian")


@dataclass(frozen=True)
class GapReport:
    max_gap: float
    scale: float
    flagged: bool


def isaacs_gap_scan(spec: GameSpec, times, points) -> GapReport:
    if spec.kind != "payoff":
        raise SpecError("Isaacs gap scan only applies to payoff-based specs")
    P = np.atleast_2d(np.asarray(points, dtype=float))
    gap, scale = 0.0, 0.0
    for t in np.atleast_1d(times):
        L = spec.payoff_tensor(float(t))
        A = np.einsum("mi,iuv->muv", P, L)
        g = A.max(axis=2).min(axis=1) - A.min(axis=1).max(axis=1)
        gap = max(gap, float(g.max()))
        scale = max(scale, float(np.abs(L).max()))
    return GapReport(gap, scale, gap > 1e-6 * max(scale, 1.0))


def lipschitz_estimate(H_table: np.ndarray, grid) -> float:
    """Largest |H(p) - H(q)| / |p - q| over neighboring grid nodes and knots."""
    best = 0.0
    step = math.sqrt(2) / grid.m
    for d in grid.directions:
        nb = grid.neighbors(d)
        ok = nb >= 0
        diff = np.abs(H_table[:, nb[ok]] - H_table[:, ok])
        if diff.size:
            best = max(best, float(diff.max()) / step)
    return best


# ---------------------------------------------------------------- fixtures


def _reveal(params) -> GameSpec:
    _no_params("reveal", params)

    def payoff(t, u, v):
        return u + v, -u + 2 * v

    return GameSpec("reveal", 2, 1.0, ActionGrid([-1.0, 1.0], [-1.0, 1.0]), payoff=payoff)


def ex1_alpha(alpha_start: float, alpha_end: float, T: float) -> Callable[[float], float]:
    return lambda t: alpha_start + (alpha_end - alpha_start) * np.asarray(t) / T


def ex1_band(alpha: Callable) -> tuple[Callable, Callable]:
    def h1(t):
        a = alpha(t)
        return 0.5 - 1.0 / np.sqrt(2 * a**2 - 4)

    def h2(t):
        return 1.0 - h1(t)

    return h1, h2


def _ex1(params) -> GameSpec:
    params = dict(params)
    a0 = float(params.pop("alpha_start", 4.0))
    a1 = float(params.pop("alpha_end", 3.0))
    form = params.pop("form", "hamiltonian")
    n_u = int(params.pop("n_u", 21))
    n_v = int(params.pop("n_v", 720))
    if params:
        raise SpecError(f"unknown ex1 parameters: {sorted(params)}")
    if not (a1 > 2 and a0 > 2):
        raise SpecError("ex1 requires alpha(t) > 2 on [0, T]")
    if a0 < a1:
        raise SpecError("ex1 requires a nonincreasing alpha (alpha_start >= alpha_end)")
    T = 1.0
    alpha = ex1_alpha(a0, a1, T)
    band = ex1_band(alpha)
    info = {"alpha_start": a0, "alpha_end": a1, "alpha": alpha}
    if form == "payoff":
        u = np.linspace(-1.0, 1.0, n_u)
        v = np.linspace(0.0, 2 * np.pi, n_v, endpoint=False)

        def payoff(t, uu, vv):
            a = alpha(t)
            return uu + a * np.cos(vv), -uu + a * np.sin(vv)

        return GameSpec("ex1", 2, T, ActionGrid(u, v), payoff=payoff, band=band, params=info)
    if form != "hamiltonian":
        raise SpecError(f"ex1 form must be 'hamiltonian' or 'payoff', got {form!r}")

    def H(t, P):
        return -np.abs(P[:, 0] - P[:, 1]) + alpha(t) * np.sqrt(P[:, 0] ** 2 + P[:, 1] ** 2)

    def saddle_u(t, P):
        return np.where(P[:, 0] < P[:, 1], 1.0, -1.0)

    return GameSpec("ex1", 2, T, hamiltonian=H, saddle_u=saddle_u, band=band, params=info)


def _azema(params) -> GameSpec:
    _no_params("azema_h", params)

    def h1(t):
        return 0.5 - np.sqrt(t)

    def h2(t):
        return 0.5 + np.sqrt(t)

    return GameSpec("azema_h", 2, 0.25, band=(h1, h2))


def _counterexample(params) -> GameSpec:
    params = dict(params)
    b = float(params.pop("b", 0.7))
    if params:
        raise SpecError(f"unknown counterexample parameters: {sorted(params)}")
    T = 1.0
    if not T / 2 < b < T:
        raise SpecError("counterexample needs T/2 < b < T so that 0 < a < b")

    def lam(t):
        return b - np.asarray(t)

    def Lam(t):
        t = np.asarray(t)
        return b * (T - t) - (T**2 - t**2) / 2

    def H(t, P):
        return lam(t) * P[:, 0] * P[:, 1]

    info = {"b": b, "a": 2 * b - T, "lam": lam, "Lam": Lam}
    return GameSpec("counterexample", 2, T, hamiltonian=H, params=info)


def _autonomous3(params) -> GameSpec:
    _no_params("autonomous3", params)

    def H(t, P):
        return 1.0 - np.abs(P[:, 0] - P[:, 1])

    return GameSpec("autonomous3", 3, 1.0, hamiltonian=H)


def _no_params(name, params):
    if params:
        raise SpecError(f"fixture {name!r} takes no parameters, got {sorted(params)}")


BUILTINS = {
    "reveal": _reveal,
    "ex1": _ex1,
    "azema_h": _azema,
    "counterexample": _counterexample,
    "autonomous3": _autonomous3,
}


def load_builtin(name: str, parameters: dict | None = None) -> GameSpec:
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise SpecError(f"unknown fixture {name!r}; choose from {sorted(BUILTINS)}") from None
    return factory(parameters or {})


def tensor_spec(payoffs, u_values, v_values, horizon: float, name: str = "custom") -> GameSpec:
    """Time-independent payoff spec from a (dim, nu, nv) tensor."""
    L = np.asarray(payoffs, dtype=float)
    acts = ActionGrid(u_values, v_values)
    if L.ndim != 3 or L.shape[1:] != (len(acts.u_values), len(acts.v_values)):
        raise SpecError(f"payoff tensor shape {L.shape} does not match the action grid")
    if L.shape[0] not in (2, 3):
        raise SpecError("payoff tensor must have 2 or 3 states")
    if not np.all(np.isfinite(L)):
        raise SpecError("payoff tensor has non-finite entries")
    return GameSpec(name, L.shape[0], float(horizon), acts, payoff=lambda t, u, v: tuple(L))
