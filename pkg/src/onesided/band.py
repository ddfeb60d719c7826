"""Exact simulation of the band-edge revelation process for two states.

The posterior holds at ``p0`` until the band ``[h1(t), h2(t)]`` reaches it,
splits onto the two edges, and then moves between the edges with the
transition law that keeps it a martingale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SpecError
from .rng import path_uniforms

BAND_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class BandPaths:
    times: np.ndarray  # (K,) knots, times[0] = t0
    p: np.ndarray  # (count, K) first coordinate of the posterior at each knot
    branch: np.ndarray  # (count, K) int8: -1 holding, 0 lower edge, 1 upper edge
    terminal: np.ndarray  # (count,) 1 if the path ends at e_1, else 0
    p0: float
    label: str | None = None

    @property
    def t0(self) -> float:
        return float(self.times[0])

    def __len__(self) -> int:
        return len(self.p)


def _check_band(h1, h2, times):
    lo, hi = np.asarray(h1(times), dtype=float), np.asarray(h2(times), dtype=float)
    if np.any(lo > hi + BAND_TOL):
        raise SpecError("invalid band: h1 > h2 at some knot")
    if np.any(np.diff(lo) > BAND_TOL) or np.any(np.diff(hi) < -BAND_TOL):
        raise SpecError("invalid band: h1 must decrease and h2 increase")
    return lo, hi


def ex1_exact_sampler(h1, h2, p0: float, times, count: int, seed: int, label: str | None = None) -> BandPaths:
    """Paths of the band-edge process on the knots ``times`` (starting at ``t0 = times[0]``).

    From the lower edge at ``s`` the path stays on it at ``t`` with probability
    ``(h2(t) - h1(s)) / (h2(t) - h1(t))``; from the upper edge with
    ``(h2(s) - h1(t)) / (h2(t) - h1(t))``. The last step reveals the state.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 1 or np.any(np.diff(times) <= 0):
        raise DomainError("times must be an increasing 1-d array")
    if not 0.0 <= p0 <= 1.0:
        raise DomainError(f"p0={p0} outside [0, 1]")
    lo, hi = _check_band(h1, h2, times)
    K = len(times)
    U = path_uniforms(seed, 0, count, K + 1)
    p = np.empty((count, K))
    branch = np.empty((count, K), dtype=np.int8)
    cur_b = np.full(count, -1, dtype=np.int8)
    cur_p = np.full(count, float(p0))
    for j in range(K):
        a, b = lo[j], hi[j]
        width = b - a
        hold = cur_b == -1
        if hold.any() and a - BAND_TOL <= p0 <= b + BAND_TOL:
            # first knot where the band reaches p0: split onto the edges
            up = np.clip((p0 - a) / width, 0.0, 1.0) if width > 0 else 0.0
            go_up = hold & (U[:, j] < up)
            cur_b = np.where(hold, np.where(go_up, 1, 0), cur_b).astype(np.int8)
        elif j > 0 and width > 0:
            a0, b0 = lo[j - 1], hi[j - 1]
            stay = np.where(cur_b == 0, (b - a0) / width, (b0 - a) / width)
            flip = (cur_b >= 0) & (U[:, j] >= stay)
            cur_b = np.where(flip, 1 - cur_b, cur_b).astype(np.int8)
        cur_p = np.where(cur_b == 0, a, np.where(cur_b == 1, b, p0))
        p[:, j], branch[:, j] = cur_p, cur_b
    terminal = (U[:, K] < cur_p).astype(np.int8)
    return BandPaths(times, p, branch, terminal, float(p0), label)


@dataclass(frozen=True)
class Proportion:
    estimate: float
    se: float
    count: int


def stay_probability(paths: BandPaths, s: float, t: float, h1=None) -> Proportion:
    """Share of paths on the lower edge at ``s`` that are still on it at ``t``."""
    js, jt = _knot(paths, s), _knot(paths, t)
    if jt <= js:
        raise DomainError("need s < t")
    base = paths.branch[:, js] == 0
    if h1 is not None:
        base &= np.abs(paths.p[:, js] - h1(s)) <= BAND_TOL
    cnt = int(base.sum())
    if cnt == 0:
        raise DomainError(f"no path on the lower edge at s={s}")
    q = float(np.mean(paths.branch[base, jt] == 0))
    return Proportion(q, float(np.sqrt(q * (1 - q) / cnt)), cnt)


def _knot(paths: BandPaths, t: float) -> int:
    j = int(np.argmin(np.abs(paths.times - t)))
    if abs(paths.times[j] - t) > 1e-9:
        raise DomainError(f"t={t} is not a knot of the sampled paths")
    return j


def below_fraction(values: np.ndarray, level: float) -> Proportion:
    """Share of ``values`` at or below ``level``, with its binomial standard error."""
    hit = np.asarray(values) <= level + BAND_TOL
    q = float(hit.mean())
    return Proportion(q, float(np.sqrt(q * (1 - q) / hit.size)), int(hit.size))


@dataclass(frozen=True, eq=False)
class AzemaReport:
    residuals: np.ndarray  # per path
    quadratic_variation: np.ndarray  # per path, sum of squared increments

    @property
    def mean(self) -> float:
        return float(self.residuals.mean())

    @property
    def std(self) -> float:
        return float(self.residuals.std(ddof=1))

    @property
    def qv_mean(self) -> float:
        return float(self.quadratic_variation.mean())


def azema_structure_residual(paths: BandPaths) -> AzemaReport:
    """``sum (dX)^2 - (T - t0) + 2 sum X_{k-1} dX_k`` with ``X = p - 1/2``, terminal step included."""
    if paths.label != "azema_h":
        raise SpecError(f"structure residual needs azema_h paths, got {paths.label!r}")
    if abs(paths.t0) > 1e-12 or abs(paths.p0 - 0.5) > 1e-12 or abs(paths.times[-1] - 0.25) > 1e-12:
        raise SpecError("structure residual needs t0 = 0, p0 = 1/2 and T = 1/4")
    X = np.column_stack([paths.p, paths.terminal.astype(float)]) - 0.5
    dX = np.diff(X, axis=1)
    qv = np.sum(dX**2, axis=1)
    res = qv - (paths.times[-1] - paths.t0) + 2.0 * np.sum(X[:, :-1] * dX, axis=1)
    return AzemaReport(res, qv)
