"""Martingale kernels built from the splitting rules of a solved value table."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import KernelError
from .simplex import SimplexGrid
from .solver import TimeGrid, ValueTable


@dataclass(frozen=True, eq=False)
class MartingaleKernel:
    """Transition law ``P[p_{k+1} = targets[k, node, l] | p_k = node] = weights[k, node, l]``.

    Rows are padded with id -1 and weight 0. The terminal step (after knot n)
    jumps to ``e_i`` with probability ``p_i`` and is not stored.
    """

    tgrid: TimeGrid
    grid: SimplexGrid
    targets: np.ndarray  # (n, N, W) int32
    weights: np.ndarray  # (n, N, W)

    def __post_init__(self):
        n, N = self.tgrid.n, self.grid.size
        if self.targets.shape[:2] != (n, N) or self.targets.shape != self.weights.shape:
            raise KernelError(f"kernel arrays have shape {self.targets.shape}, expected ({n}, {N}, W)")

    @property
    def width(self) -> int:
        return self.targets.shape[2]

    def row(self, k: int, node: int) -> dict[int, float]:
        ids, w = self.targets[k, node], self.weights[k, node]
        out: dict[int, float] = {}
        for j, x in zip(ids, w):
            if j >= 0 and x > 0:
                out[int(j)] = out.get(int(j), 0.0) + float(x)
        return out

    def mean_error(self) -> float:
        """Largest |sum_l w_l pi^l - node| over all rows."""
        P = self.grid.points
        T = P[np.maximum(self.targets, 0)] * self.weights[..., None]
        return float(np.abs(T.sum(axis=2) - P[None]).max())

    def row_sum_error(self) -> float:
        return float(np.abs(self.weights.sum(axis=2) - 1.0).max())


def conditional_weights(grid: SimplexGrid, targets: np.ndarray, weights: np.ndarray, nodes, state):
    """Rows reweighted by ``pi^l_i / p_i``.

    ``targets`` and ``weights`` are (M, W) rows taken at ``nodes`` (M,);
    ``state`` is a scalar or an (M,) array of 0-based indices. Returns the
    conditional weights and a mask of frozen rows (``p_i = 0``), which stay put.
    """
    P = grid.points
    nodes = np.asarray(nodes)
    state = np.broadcast_to(np.asarray(state), nodes.shape)
    pi = np.where(targets >= 0, P[np.maximum(targets, 0), state[:, None]], 0.0)
    pk = P[nodes, state]
    frozen = pk <= 0.0
    cw = weights * pi / np.where(frozen, 1.0, pk)[:, None]
    cw[frozen] = 0.0
    cw[frozen, 0] = 1.0
    return cw, frozen


@dataclass(frozen=True, eq=False)
class ConditionalKernel:
    """The law of the posterior given the realized state ``state`` (0-based)."""

    base: MartingaleKernel
    state: int

    def row(self, k: int, node: int) -> dict[int, float]:
        ids = self.base.targets[k, node][None]
        cw, frozen = conditional_weights(self.base.grid, ids, self.base.weights[k, node][None], [node], self.state)
        if frozen[0]:
            return {int(node): 1.0}
        out: dict[int, float] = {}
        for j, x in zip(ids[0], cw[0]):
            if x > 0:
                out[int(j)] = out.get(int(j), 0.0) + float(x)
        return out


def build_kernel(table: ValueTable) -> MartingaleKernel:
    if table.split_ids is None or table.split_w is None:
        raise KernelError("value table carries no splitting rules")
    return MartingaleKernel(table.tgrid, table.grid, table.split_ids.astype(np.int32), table.split_w.copy())


def condition_kernel(kernel: MartingaleKernel, i: int) -> ConditionalKernel:
    """Condition on state ``i`` (1-based, as players index states)."""
    if not 1 <= i <= kernel.grid.dim:
        raise KernelError(f"state index {i} outside 1..{kernel.grid.dim}")
    return ConditionalKernel(kernel, i - 1)


def _identity_rows(n: int, N: int, W: int):
    ids = -np.ones((n, N, W), dtype=np.int32)
    ids[:, :, 0] = np.arange(N)
    w = np.zeros((n, N, W))
    w[:, :, 0] = 1.0
    return ids, w


def perturb_kernel(kernel: MartingaleKernel, mode: str, theta: float | None = None) -> MartingaleKernel:
    """Suboptimal but valid competitors: ``delay``, ``eager`` or ``mix`` with weight ``theta``."""
    n, N, W = kernel.targets.shape
    grid = kernel.grid
    if mode == "delay":
        ids, w = kernel.targets.copy(), kernel.weights.copy()
        half = n // 2 + (n % 2)  # every k with k < n/2
        ids[:half], w[:half] = _identity_rows(half, N, W)
        return MartingaleKernel(kernel.tgrid, grid, ids, w)
    if mode == "eager":
        width = max(W, grid.dim)
        ids = np.broadcast_to(grid.vertex_ids.astype(np.int32), (n, N, grid.dim))
        w = np.broadcast_to(grid.points, (n, N, grid.dim))
        ids = np.where(w > 0, ids, -1)
        pad = width - grid.dim
        ids = np.concatenate([ids, -np.ones((n, N, pad), dtype=np.int32)], axis=2)
        w = np.concatenate([w, np.zeros((n, N, pad))], axis=2)
        return MartingaleKernel(kernel.tgrid, grid, ids.astype(np.int32), w)
    if mode == "mix":
        if theta is None or not 0.0 <= theta <= 1.0:
            raise KernelError(f"mix weight theta must lie in [0, 1], got {theta}")
        if theta == 1.0:
            return kernel
        stay_ids, stay_w = _identity_rows(n, N, 1)
        ids = np.concatenate([kernel.targets, stay_ids], axis=2)
        w = np.concatenate([theta * kernel.weights, (1.0 - theta) * stay_w], axis=2)
        return MartingaleKernel(kernel.tgrid, grid, ids, w)
    raise KernelError(f"unknown perturbation {mode!r}; use delay, eager or mix")
