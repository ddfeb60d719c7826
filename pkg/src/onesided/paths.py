"""Sampling posterior paths from martingale kernels, and the estimators built on them."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import KernelError
from .games import GameSpec
from .kernel import ConditionalKernel, MartingaleKernel, conditional_weights
from .pde import NonRevealingSet
from .rng import path_uniforms, thread_count
from .simplex import SimplexGrid, simplex_point
from .solver import TimeGrid, ValueTable

CHUNK = 4096


@dataclass(frozen=True)
class MartingalePath:
    p: np.ndarray  # (n+2, dim): p_0 .. p_n and the terminal vertex
    realized: int | None  # 1-based state index, when known

    @property
    def p0(self) -> np.ndarray:
        return self.p[0]


@dataclass(frozen=True, eq=False)
class PathBatch:
    """``count`` paths stored as node ids; the terminal step as a vertex index."""

    grid: SimplexGrid
    tgrid: TimeGrid
    nodes: np.ndarray  # (count, n+1) node ids of p_0..p_n
    terminal: np.ndarray  # (count,) 0-based vertex index of p_{n+1}
    realized: np.ndarray | None  # (count,) 0-based state index
    start: int
    snap_distance: float

    def __len__(self) -> int:
        return len(self.nodes)

    def __getitem__(self, j: int) -> MartingalePath:
        p = np.vstack([self.grid.points[self.nodes[j]], np.eye(self.grid.dim)[self.terminal[j]]])
        i = None if self.realized is None else int(self.realized[j]) + 1
        return MartingalePath(p, i)

    def coords(self, k: int) -> np.ndarray:
        """Posteriors at step ``k`` for every path, ``k`` in 0..n+1."""
        if k == self.tgrid.n + 1:
            return np.eye(self.grid.dim)[self.terminal]
        return self.grid.points[self.nodes[:, k]]


def _pick(weights: np.ndarray, u: np.ndarray) -> np.ndarray:
    cum = np.cumsum(weights, axis=1)
    return np.argmax(cum > (u * cum[:, -1])[:, None], axis=1)


def _sample_chunk(base, fixed_state, joint, start, seed, first, count):
    n, dim = base.tgrid.n, base.grid.dim
    P = base.grid.points
    U = path_uniforms(seed, first, count, n + 2)
    cur = np.full(count, start, dtype=np.int64)
    nodes = np.empty((count, n + 1), dtype=np.int32)
    nodes[:, 0] = cur
    if fixed_state is not None:
        state = np.full(count, fixed_state)
    elif joint:
        state = _pick(np.broadcast_to(P[start], (count, dim)), U[:, 0])
    else:
        state = None
    rows = np.arange(count)
    for k in range(n):
        ids = base.targets[k, cur]
        w = base.weights[k, cur]
        if state is not None:
            w, frozen = conditional_weights(base.grid, ids, w, cur, state)
        else:
            frozen = None
        nxt = ids[rows, _pick(w, U[:, k + 1])].astype(np.int64)
        if frozen is not None:
            nxt = np.where(frozen, cur, nxt)
        cur = nxt
        nodes[:, k + 1] = cur
    if state is not None:
        terminal = state
    else:
        terminal = _pick(P[cur], U[:, n + 1])
    return nodes, terminal, state


def sample_paths(kernel, p0, count: int, seed: int, joint: bool = True, threads: int | None = None) -> PathBatch:
    """Sample ``count`` paths from ``p0`` (snapped to the nearest node).

    With a ConditionalKernel every path carries its state; with a plain kernel
    and ``joint`` the state is drawn first with law ``p0`` and the path follows
    the conditional kernel, which gives the unconditional law overall.
    """
    if isinstance(kernel, ConditionalKernel):
        base, fixed = kernel.base, kernel.state
    elif isinstance(kernel, MartingaleKernel):
        base, fixed = kernel, None
    else:
        raise KernelError(f"cannot sample from {type(kernel).__name__}")
    if base.targets.size == 0:
        raise KernelError("kernel has no rows")
    if int(count) != count or count < 1:
        raise KernelError("path count must be a positive integer")
    start, snap = base.grid.nearest_node(simplex_point(p0, base.grid.dim))
    firsts = list(range(0, count, CHUNK))
    job = lambda f: _sample_chunk(base, fixed, joint, start, seed, f, min(CHUNK, count - f))  # noqa: E731
    workers = threads or thread_count()
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(job, firsts))
    else:
        parts = [job(f) for f in firsts]
    nodes = np.concatenate([x[0] for x in parts])
    terminal = np.concatenate([x[1] for x in parts])
    realized = None if parts[0][2] is None else np.concatenate([x[2] for x in parts])
    return PathBatch(base.grid, base.tgrid, nodes, terminal, realized, start, snap)


# ---------------------------------------------------------------- estimators


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    se: float
    count: int


def _estimate(x: np.ndarray) -> MCEstimate:
    n = len(x)
    se = float(np.std(x, ddof=1) / np.sqrt(n)) if n > 1 else float("nan")
    return MCEstimate(float(np.mean(x)), se, n)


def _running_cost(paths: PathBatch, H: np.ndarray, upto: int) -> np.ndarray:
    """``tau * sum_{r<upto} H[r, p_{r+1}]`` per path."""
    out = np.empty(len(paths))
    r = np.arange(upto)
    for a in range(0, len(paths), CHUNK):
        block = paths.nodes[a : a + CHUNK, 1 : upto + 1]
        out[a : a + CHUNK] = H[r[None, :], block].sum(axis=1)
    return paths.tgrid.tau * out


def estimate_value_mc(paths: PathBatch, spec: GameSpec) -> MCEstimate:
    """Mean and standard error of ``tau sum_r H(t_r, p_{r+1})``."""
    H = spec.H_table(paths.tgrid.knots[:-1], paths.grid.points)
    return _estimate(_running_cost(paths, H, paths.tgrid.n))


def dp_estimate(paths: PathBatch, table: ValueTable, k: int) -> MCEstimate:
    """Mean of ``tau sum_{r<k} H(t_r, p_{r+1}) + V(t_k, p_k)``."""
    if not 0 <= k <= table.tgrid.n:
        raise KernelError(f"knot index {k} outside 0..{table.tgrid.n}")
    x = _running_cost(paths, table.H, k) + table.values[k][paths.nodes[:, k]]
    return _estimate(x)


def knot_means(paths: PathBatch) -> tuple[np.ndarray, np.ndarray]:
    """Per-knot mean posterior and its standard error, shapes (n+2, dim)."""
    n = paths.tgrid.n
    means, ses = [], []
    for k in range(n + 2):
        X = paths.coords(k)
        means.append(X.mean(axis=0))
        ses.append(X.std(axis=0, ddof=1) / np.sqrt(len(X)))
    return np.array(means), np.array(ses)


@dataclass(frozen=True, eq=False)
class PosteriorReport:
    k: np.ndarray  # step of each reported cell, n+1 for the terminal step
    node: np.ndarray  # node id, or vertex index at the terminal step
    visits: np.ndarray
    empirical: np.ndarray  # (cells, dim) frequencies of the realized state
    deviation: np.ndarray  # max_i |P^[i | p_k] - (p_k)_i|

    @property
    def max_deviation(self) -> float:
        return float(self.deviation.max()) if self.deviation.size else 0.0


def posterior_consistency(paths: PathBatch, min_visits: int = 500) -> PosteriorReport:
    if paths.realized is None:
        raise KernelError("posterior consistency needs jointly sampled paths")
    grid, n = paths.grid, paths.tgrid.n
    dim, N = grid.dim, grid.size
    ks, nodes, visits, emp, dev = [], [], [], [], []
    for k in range(n + 2):
        if k <= n:
            at, size, coords = paths.nodes[:, k], N, grid.points
        else:
            at, size, coords = paths.terminal, dim, np.eye(dim)
        total = np.bincount(at, minlength=size)
        keep = np.flatnonzero(total >= min_visits)
        if not keep.size:
            continue
        freq = np.stack([np.bincount(at[paths.realized == i], minlength=size)[keep] for i in range(dim)], axis=1)
        freq = freq / total[keep, None]
        ks.append(np.full(keep.size, k))
        nodes.append(keep)
        visits.append(total[keep])
        emp.append(freq)
        dev.append(np.abs(freq - coords[keep]).max(axis=1))
    if not ks:
        z = np.zeros(0)
        return PosteriorReport(z.astype(int), z.astype(int), z.astype(int), np.zeros((0, dim)), z)
    return PosteriorReport(*(np.concatenate(x) for x in (ks, nodes, visits, emp, dev)))


def subgradient_slopes(grid: SimplexGrid, values: np.ndarray) -> np.ndarray:
    """Average one-sided slopes along ``e_j - e_last`` for j < dim-1, shape (dim-1, N)."""
    out = np.zeros((grid.dim - 1, grid.size))
    for j in range(grid.dim - 1):
        d = np.zeros(grid.dim, dtype=np.int64)
        d[j], d[-1] = 1, -1
        fwd_id, bwd_id = grid.neighbors(d), grid.neighbors(-d)
        fwd = np.where(fwd_id >= 0, (values[np.maximum(fwd_id, 0)] - values) * grid.m, 0.0)
        bwd = np.where(bwd_id >= 0, (values - values[np.maximum(bwd_id, 0)]) * grid.m, 0.0)
        cnt = (fwd_id >= 0).astype(int) + (bwd_id >= 0)
        out[j] = (fwd + bwd) / np.maximum(cnt, 1)
    return out


@dataclass(frozen=True, eq=False)
class PathDiagnostics:
    in_H_fraction: float
    jump_residuals: np.ndarray  # |V(t_k, p_k) - V(t_k, p_{k-1}) - <xi, p_k - p_{k-1}>| per jump

    @property
    def max_jump_residual(self) -> float:
        return float(self.jump_residuals.max()) if self.jump_residuals.size else 0.0

    @property
    def n_jumps(self) -> int:
        return int(self.jump_residuals.size)


def path_diagnostics(table: ValueTable, nrs: NonRevealingSet, paths: PathBatch) -> PathDiagnostics:
    """Share of states in the non-revealing set (steps 1..n-1) and jump flatness residuals."""
    n, grid = table.tgrid.n, table.grid
    hits, total = 0, 0
    for k in range(1, n):
        hits += int(nrs.members[k, paths.nodes[:, k]].sum())
        total += len(paths)
    P = grid.points
    res = []
    for k in range(1, n + 1):
        a, b = paths.nodes[:, k - 1], paths.nodes[:, k]
        moved = a != b
        if not moved.any():
            continue
        a, b = a[moved], b[moved]
        v = table.values[k]
        xi = subgradient_slopes(grid, v)[:, a].T
        dp = (P[b] - P[a])[:, : grid.dim - 1]
        res.append(np.abs(v[b] - v[a] - np.sum(xi * dp, axis=1)))
    jumps = np.concatenate(res) if res else np.zeros(0)
    return PathDiagnostics(hits / total if total else 1.0, jumps)
