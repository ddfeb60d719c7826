"""Barycentric lattices on the probability simplex, lower convex envelopes,
splitting rules and discrete Fenchel conjugates.

Only dimensions 2 and 3 are supported. Grid nodes are the points ``k / m`` with
nonnegative integer ``k`` summing to ``m``, ordered lexicographically in ``k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.spatial import ConvexHull

from .errors import GeometryError

SUM_TOL = 1e-12
GEOM_TOL = 1e-10
# barycentric coordinates this negative still count as "inside"
INSIDE_TOL = 1e-12


def simplex_point(coords, dim=None) -> np.ndarray:
    """Validate ``coords`` as a point of the simplex and return it as floats."""
    p = np.asarray(coords, dtype=float)
    if p.ndim != 1 or p.size < 2:
        raise GeometryError(f"a simplex point needs at least 2 coordinates, got shape {p.shape}")
    if dim is not None and p.size != dim:
        raise GeometryError(f"expected {dim} coordinates, got {p.size}")
    if not np.all(np.isfinite(p)):
        raise GeometryError("simplex point has non-finite coordinates")
    if p.min() < -SUM_TOL or abs(p.sum() - 1.0) > SUM_TOL * 10:
        raise GeometryError(f"point {p.tolist()} is outside the simplex")
    return np.clip(p, 0.0, None)


def vertex(i: int, dim: int) -> np.ndarray:
    """The vertex ``e_i`` (0-based ``i``)."""
    e = np.zeros(dim)
    e[i] = 1.0
    return e


@dataclass(frozen=True, eq=False)
class SimplexGrid:
    dim: int
    m: int
    ints: np.ndarray  # (N, dim) integer coordinates, lexicographic

    @property
    def size(self) -> int:
        return len(self.ints)

    @cached_property
    def points(self) -> np.ndarray:
        return self.ints / self.m

    @cached_property
    def _index(self) -> np.ndarray:
        # dense map from the first dim-1 integer coordinates to node id
        idx = -np.ones((self.m + 1,) * (self.dim - 1), dtype=np.int64)
        idx[tuple(self.ints[:, : self.dim - 1].T)] = np.arange(self.size)
        return idx

    def node_id(self, ints) -> int:
        k = np.asarray(ints, dtype=np.int64)
        if k.shape != (self.dim,) or k.min() < 0 or k.sum() != self.m:
            raise GeometryError(f"{k.tolist()} is not a node of the grid")
        return int(self._index[tuple(k[:-1])])

    def node_of_point(self, p, tol=1e-12) -> int:
        """Node id of ``p`` if it sits on a node (within ``tol``), else -1."""
        k = np.rint(np.asarray(p) * self.m)
        if np.abs(k / self.m - p).max() > tol or k.sum() != self.m or k.min() < 0:
            return -1
        return int(self._index[tuple(k[:-1].astype(np.int64))])

    def nearest_node(self, p) -> tuple[int, float]:
        """Nearest grid node to ``p`` and the Euclidean snap distance."""
        p = simplex_point(p, self.dim)
        d = np.linalg.norm(self.points - p, axis=1)
        j = int(np.argmin(d))
        return j, float(d[j])

    @cached_property
    def vertex_ids(self) -> np.ndarray:
        return np.array([self.node_id(self.m * vertex(i, self.dim).astype(int)) for i in range(self.dim)])

    @cached_property
    def directions(self) -> list[np.ndarray]:
        """Edge directions ``e_i - e_j`` (i < j) in integer units."""
        out = []
        for i in range(self.dim):
            for j in range(i + 1, self.dim):
                d = np.zeros(self.dim, dtype=np.int64)
                d[i], d[j] = 1, -1
                out.append(d)
        return out

    def neighbors(self, direction) -> np.ndarray:
        """Id of ``node + direction`` for every node, -1 where it leaves the simplex."""
        d = np.asarray(direction, dtype=np.int64)
        shifted = self.ints + d
        ok = (shifted >= 0).all(axis=1)
        out = -np.ones(self.size, dtype=np.int64)
        out[ok] = self._index[tuple(shifted[ok, : self.dim - 1].T)]
        return out

    @cached_property
    def on_boundary(self) -> np.ndarray:
        return (self.ints == 0).any(axis=1)

    def interpolate(self, values, p) -> np.ndarray | float:
        """Piecewise-linear interpolation of node values at ``p`` (one point or (M, dim))."""
        values = np.asarray(values, dtype=float)
        P = np.atleast_2d(np.asarray(p, dtype=float))
        scalar = np.ndim(p) == 1
        if self.dim == 2:
            out = np.interp(P[:, 0], self.points[:, 0], values)
        else:
            out = self._interp3(values, P)
        return float(out[0]) if scalar else out

    def _interp3(self, values, P):
        m = self.m
        x = np.clip(P[:, 0] * m, 0, m)
        y = np.clip(P[:, 1] * m, 0, m - x)
        a = np.minimum(np.floor(x), m).astype(np.int64)
        b = np.minimum(np.floor(y), m - a).astype(np.int64)
        fa, fb = x - a, y - b
        idx = self._index
        upper = fa + fb > 1.0

        def nid(i, j):
            ok = (i + j <= m) & (i <= m) & (j <= m)
            out = np.where(ok, idx[np.minimum(i, m), np.minimum(j, m)], idx[a, b])
            return out

        lo = (1 - fa - fb) * values[nid(a, b)] + fa * values[nid(a + 1, b)] + fb * values[nid(a, b + 1)]
        hi = (fa + fb - 1) * values[nid(a + 1, b + 1)] + (1 - fb) * values[nid(a + 1, b)] + (1 - fa) * values[nid(a, b + 1)]
        return np.where(upper, hi, lo)


def make_grid(dim: int, m: int) -> SimplexGrid:
    if dim not in (2, 3):
        raise GeometryError(f"unsupported dimension {dim}; only 2 and 3 are implemented")
    if int(m) != m or m < 2:
        raise GeometryError(f"resolution {m} too small; need an integer m >= 2")
    m = int(m)
    if dim == 2:
        ints = [(k, m - k) for k in range(m + 1)]
    else:
        ints = [(a, b, m - a - b) for a in range(m + 1) for b in range(m + 1 - a)]
    return SimplexGrid(dim, m, np.array(ints, dtype=np.int64))


@dataclass(frozen=True)
class SplittingRule:
    base: np.ndarray
    weights: np.ndarray  # (L,)
    targets: np.ndarray  # (L, dim)
    target_ids: np.ndarray  # (L,) grid node ids

    @property
    def size(self) -> int:
        return len(self.weights)

    def mean(self) -> np.ndarray:
        return self.weights @ self.targets


@dataclass(frozen=True, eq=False)
class LowerEnvelope:
    grid: SimplexGrid
    f: np.ndarray
    values: np.ndarray
    facets: np.ndarray  # (F, dim) vertex ids, each row sorted, rows lexicographic
    active: np.ndarray
    tol: float

    @cached_property
    def _bary(self) -> np.ndarray:
        # inverse of the (coords x vertices) matrix of each facet
        V = self.grid.points[self.facets]  # (F, l, j)
        return np.linalg.inv(np.transpose(V, (0, 2, 1)))

    @cached_property
    def planes(self) -> np.ndarray:
        """Linear coefficients ``c`` with ``env(p) = c . p`` on each facet."""
        V = self.grid.points[self.facets]
        return np.linalg.solve(V, self.f[self.facets][..., None])[..., 0]

    def locate(self, P) -> tuple[np.ndarray, np.ndarray]:
        """Facet index and barycentric weights for each row of ``P``.

        Points on a shared boundary go to the lowest facet index.
        """
        P = np.atleast_2d(np.asarray(P, dtype=float))
        if self.grid.dim == 2:
            hx = self.grid.points[self.facets[:, 0], 0]
            j = np.clip(np.searchsorted(hx, P[:, 0], side="left") - 1, 0, len(self.facets) - 1)
            bary = np.einsum("mij,mj->mi", self._bary[j], P)
            return j, bary
        fac = np.empty(len(P), dtype=np.int64)
        bary = np.empty((len(P), self.grid.dim))
        chunk = max(1, 2_000_000 // max(1, len(self.facets)))
        for s in range(0, len(P), chunk):
            Q = P[s : s + chunk]
            lam = np.einsum("fij,mj->mfi", self._bary, Q)
            inside = (lam >= -INSIDE_TOL).all(axis=2)
            if not inside.any(axis=1).all():
                # rounding at the outer boundary: take the least-violating facet
                score = np.where(inside, 1.0, lam.min(axis=2))
                j = np.argmax(score, axis=1)
            else:
                j = np.argmax(inside, axis=1)
            fac[s : s + chunk] = j
            bary[s : s + chunk] = lam[np.arange(len(Q)), j]
        return fac, bary

    def value_at(self, p) -> float:
        p = simplex_point(p, self.grid.dim)
        j, bary = self.locate(p)
        return float(bary[0] @ self.f[self.facets[j[0]]])

    def node_splits(self) -> tuple[np.ndarray, np.ndarray]:
        """Splitting targets and weights for every node, padded with -1 / 0.

        Active nodes get the trivial rule; other nodes split onto the vertices
        of their facet.
        """
        N, dim = self.grid.size, self.grid.dim
        ids = -np.ones((N, dim), dtype=np.int64)
        w = np.zeros((N, dim))
        ids[:, 0] = np.arange(N)
        w[:, 0] = 1.0
        todo = np.flatnonzero(~self.active)
        if todo.size:
            j, bary = self.locate(self.grid.points[todo])
            bary = np.where(bary > INSIDE_TOL, bary, 0.0)
            bary /= bary.sum(axis=1, keepdims=True)
            tids = np.where(bary > 0, self.facets[j], -1)
            # push the dropped (zero-weight) slots to the end of each row
            order = np.argsort(tids < 0, axis=1, kind="stable")
            ids[todo] = np.take_along_axis(tids, order, axis=1)
            w[todo] = np.take_along_axis(bary, order, axis=1)
        return ids, w


def _lower_chain(f: np.ndarray, tol: float) -> list[int]:
    """Lower hull of the points (k, f[k]) by the monotone chain; collinear points dropped."""
    y = f.tolist()
    hull: list[int] = []
    for j in range(len(y)):
        yj = y[j]
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            chord = y[a] + (yj - y[a]) * (b - a) / (j - a)
            if y[b] >= chord - tol:
                hull.pop()
            else:
                break
        hull.append(j)
    return hull


def _lower_facets_3d(grid: SimplexGrid, f: np.ndarray) -> np.ndarray:
    xy = grid.points[:, :2]
    span = float(np.ptp(f)) + 1.0
    # an apex far above the centroid keeps the lifted set full-dimensional
    apex = np.array([[1 / 3, 1 / 3, float(f.max()) + span]])
    hull = ConvexHull(np.vstack([np.column_stack([xy, f]), apex]))
    lower = hull.equations[:, 2] < -1e-9
    simp = np.sort(hull.simplices[lower], axis=1)
    simp = simp[(simp < grid.size).all(axis=1)]
    P = xy[simp]
    area = 0.5 * np.abs(
        (P[:, 1, 0] - P[:, 0, 0]) * (P[:, 2, 1] - P[:, 0, 1]) - (P[:, 2, 0] - P[:, 0, 0]) * (P[:, 1, 1] - P[:, 0, 1])
    )
    simp = simp[area > 1e-14 / grid.m**2]
    order = np.lexsort(simp.T[::-1])
    return simp[order]


def convex_envelope(grid: SimplexGrid, f) -> LowerEnvelope:
    """Lower convex envelope of the piecewise-linear interpolant of node values ``f``."""
    f = np.asarray(f, dtype=float)
    if f.shape != (grid.size,):
        raise GeometryError(f"expected {grid.size} node values, got shape {f.shape}")
    if not np.all(np.isfinite(f)):
        raise GeometryError("envelope input contains non-finite values")
    tol = GEOM_TOL * max(1.0, float(np.abs(f).max()))
    if grid.dim == 2:
        hull = np.array(_lower_chain(f, tol))
        facets = np.column_stack([hull[:-1], hull[1:]])
        values = np.interp(np.arange(grid.size), hull, f[hull])
        env = LowerEnvelope(grid, f, values, facets, values >= f - tol, tol)
        return env
    facets = _lower_facets_3d(grid, f)
    env = LowerEnvelope(grid, f, np.empty(0), facets, np.empty(0, dtype=bool), tol)
    j, bary = env.locate(grid.points)
    values = np.einsum("ni,ni->n", bary, f[facets[j]])
    values = np.minimum(values, f + tol)
    return LowerEnvelope(grid, f, values, facets, values >= f - tol, tol)


def splitting_at(env: LowerEnvelope, p) -> SplittingRule:
    """Decompose ``p`` onto envelope-touching nodes (the facet vertices around it)."""
    p = simplex_point(p, env.grid.dim)
    nid = env.grid.node_of_point(p)
    if nid >= 0 and env.active[nid]:
        return SplittingRule(p, np.ones(1), env.grid.points[[nid]], np.array([nid]))
    j, bary = env.locate(p)
    lam = np.where(bary[0] > INSIDE_TOL, bary[0], 0.0)
    keep = lam > 0
    ids = env.facets[j[0]][keep]
    lam = lam[keep] / lam[keep].sum()
    return SplittingRule(p, lam, env.grid.points[ids], ids)


@dataclass(frozen=True)
class DualField:
    axis: np.ndarray  # lattice coordinates along each axis
    values: np.ndarray  # shape (len(axis),) * dim

    @property
    def spacing(self) -> float:
        return float(self.axis[1] - self.axis[0])

    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*([self.axis] * self.values.ndim), indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=1)


def fenchel_conjugate(grid: SimplexGrid, f, half_width: float, resolution: int) -> DualField:
    """``max_p p . q - f(p)`` over grid nodes, on a regular lattice of ``[-L, L]^dim``."""
    if not half_width > 0:
        raise GeometryError("dual box half-width must be positive")
    f = np.asarray(f, dtype=float)
    axis = np.linspace(-half_width, half_width, int(resolution) + 1)
    field = DualField(axis, np.empty((len(axis),) * grid.dim))
    Q = field.points()
    out = np.empty(len(Q))
    P = grid.points
    chunk = max(1, 4_000_000 // grid.size)
    for s in range(0, len(Q), chunk):
        out[s : s + chunk] = (Q[s : s + chunk] @ P.T - f).max(axis=1)
    return DualField(axis, out.reshape(field.values.shape))


def tangent_second_difference(grid: SimplexGrid, f, node: int, direction) -> float:
    """``m^2 (f(p + d/m) - 2 f(p) + f(p - d/m))`` for an integer edge vector ``d``."""
    d = np.asarray(direction, dtype=np.int64)
    if d.shape != (grid.dim,) or d.sum() != 0 or not d.any():
        raise GeometryError(f"direction {d.tolist()} is not a nonzero tangent lattice vector")
    k = grid.ints[node]
    if (k + d).min() < 0 or (k - d).min() < 0:
        raise GeometryError(f"stencil at node {node} along {d.tolist()} leaves the simplex")
    f = np.asarray(f, dtype=float)
    fp = f[grid.node_id(k + d)]
    fm = f[grid.node_id(k - d)]
    return grid.m**2 * (fp - 2 * f[node] + fm)


def min_second_differences(grid: SimplexGrid, f) -> np.ndarray:
    """Per node, the smallest tangent second difference over edge directions.

    NaN where no direction fits inside the simplex.
    """
    f = np.asarray(f, dtype=float)
    out = np.full(grid.size, np.inf)
    for d in grid.directions:
        fw, bw = grid.neighbors(d), grid.neighbors(-d)
        ok = (fw >= 0) & (bw >= 0)
        sd = np.full(grid.size, np.inf)
        sd[ok] = grid.m**2 * (f[fw[ok]] - 2 * f[ok] + f[bw[ok]])
        out = np.minimum(out, sd)
    out[np.isinf(out)] = np.nan
    return out


def binomial_count(dim: int, m: int) -> int:
    return math.comb(m + dim - 1, dim - 1)
