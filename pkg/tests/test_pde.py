import numpy as np
import pytest

from onesided.errors import DomainError, GeometryError
from onesided.pde import conjugate_pde_residual, non_revealing_set, obstacle_residual, time_residuals


def test_reveal_obstacle_residual(reveal_table):
    g = reveal_table.grid
    for node in (50, 200, 333):
        tr, cr = obstacle_residual(reveal_table, 10, node)
        p1, p2 = g.points[node]
        assert tr == pytest.approx(2 * min(p1, p2), abs=1e-9)
        assert cr == pytest.approx(0.0, abs=1e-6)
    tr, cr = obstacle_residual(reveal_table, 0, int(g.vertex_ids[0]))
    assert np.isnan(cr)
    with pytest.raises(DomainError):
        obstacle_residual(reveal_table, reveal_table.tgrid.n, 5)


def test_boundary_node_rejected(aut3_table):
    g = aut3_table.grid
    edge = int(np.flatnonzero(g.on_boundary & ~np.isin(np.arange(g.size), g.vertex_ids))[0])
    with pytest.raises(GeometryError):
        obstacle_residual(aut3_table, 0, edge)


def test_ex1_plain_hj_below_band(ex1_table):
    h1, _ = ex1_table.spec.band
    tr = time_residuals(ex1_table)
    g = ex1_table.grid
    for k in (0, 100, 250, 399):
        below = g.points[:, 0] < h1(ex1_table.tgrid.knots[k])
        assert np.abs(tr[k, below]).max() <= 0.02


def test_ex1_nonrevealing_band(ex1_table):
    h1, h2 = ex1_table.spec.band
    g, tg = ex1_table.grid, ex1_table.tgrid
    nrs = non_revealing_set(ex1_table, c=0.01)
    worst = 0.0
    for k in range(0, tg.n, 20):
        out = g.points[nrs.at(k), 0]
        lo, hi = out[out < 0.5].max(), out[out > 0.5].min()
        t = tg.knots[k]
        worst = max(worst, abs(lo - h1(t)), abs(hi - h2(t)))
    assert worst <= 2 / g.m + tg.tau


def test_reveal_nonrevealing_is_vertices(reveal_table):
    nrs = non_revealing_set(reveal_table, c=0.5)
    for k in (0, 50, 199):
        assert set(nrs.at(k)) == set(reveal_table.grid.vertex_ids)
    assert (0, int(reveal_table.grid.vertex_ids[0])) in nrs


def test_aut3_nonrevealing_faces(aut3_table):
    g = aut3_table.grid
    nrs = non_revealing_set(aut3_table, c=0.5)
    face = np.minimum(g.points[:, 0], g.points[:, 1]) == 0
    for k in (0, 25, 49):
        np.testing.assert_array_equal(nrs.members[k], face)


def test_vertices_always_in_h(ex1_table):
    nrs = non_revealing_set(ex1_table)
    assert nrs.members[:, ex1_table.grid.vertex_ids].all()
    assert nrs.c > 0


def test_conjugate_reveal_small(reveal_table):
    res = conjugate_pde_residual(reveal_table, half_width=4.0, knots=[0, 100])
    assert res.terminal_error <= 1e-12
    assert res.max_abs <= 0.05


def test_conjugate_ex1_mask_fraction(ex1_table):
    res = conjugate_pde_residual(ex1_table, knots=[0, 200, 399])
    assert res.masked_fraction < 0.2
