import numpy as np
import pytest

from onesided.errors import SpecError
from onesided.games import tensor_spec
from onesided.simplex import make_grid
from onesided.solver import TimeGrid, solve_backward
from onesided.strategy import (
    UninformedStrategy,
    play_match,
    posterior_best_response,
    synthesize_informed,
)


@pytest.fixture(scope="module")
def informed(reveal_table):
    return synthesize_informed(reveal_table)


def test_vertex_controls(informed):
    L = informed.spec.payoff_tensor(0.0)
    for j, vid in enumerate(informed.table.grid.vertex_ids):
        want = np.argmin(L[j].max(axis=1))
        assert (informed.controls[:, vid] == want).all()


def test_reveal_state_one_plays_minus_one(informed):
    paths = informed.sample(1, [0.5, 0.5], 500, seed=4)
    e1 = informed.table.grid.vertex_ids[0]
    assert (paths.nodes[:, 1:] == e1).all()
    u_values = informed.spec.actions.u_values
    for k in (0, 100, 199):
        assert (u_values[informed.control(k, paths.nodes[:, k + 1])] == -1).all()


def test_ex1_controls_on_lower_edge(ex1_table):
    strat = synthesize_informed(ex1_table)
    h1, _ = ex1_table.spec.band
    g = ex1_table.grid
    lo = g.node_of_point([round(h1(0.5) * g.m) / g.m, 1 - round(h1(0.5) * g.m) / g.m])
    assert strat.control(200, lo) == 1.0


def test_missing_saddle(cex_table):
    with pytest.raises(SpecError):
        synthesize_informed(cex_table)


def test_match_needs_payoffs(ex1_table):
    strat = synthesize_informed(ex1_table)
    with pytest.raises(SpecError):
        play_match(strat, UninformedStrategy("uniform"), 10, 0)
    with pytest.raises(SpecError):
        posterior_best_response(ex1_table.spec)


def test_uninformed_validation():
    with pytest.raises(SpecError):
        UninformedStrategy("psychic")
    with pytest.raises(SpecError):
        UninformedStrategy("constant")
    assert not UninformedStrategy("i_clairvoyant").legal


def test_best_response_examples(informed):
    L = informed.spec.payoff_tensor(0.0)
    br = posterior_best_response(informed.spec)
    P = np.array([[1.0, 0.0], [0.5, 0.5]])
    u = np.array([0, 0])
    v = br.respond(L, P, u, np.array([0, 0]), None, informed.spec.actions.v_values)
    assert list(informed.spec.actions.v_values[v]) == [1.0, 1.0]
    # constant payoffs: every v ties, lowest index wins
    flat = np.zeros((2, 2, 3))
    assert list(br.respond(flat, P, u, np.array([0, 1]), None, np.arange(3))) == [0, 0]


def test_match_guarantee_and_bookkeeping(informed):
    value = informed.table.at(0.0, [0.5, 0.5])
    N = 20000
    best = play_match(informed, UninformedStrategy("posterior_best_response"), N, seed=1, p0=[0.5, 0.5])
    assert abs(best.mean - value) <= 3 * best.se + 0.02
    low = play_match(informed, UninformedStrategy("constant", -1.0), N, seed=1, p0=[0.5, 0.5])
    assert low.mean <= value + 3 * low.se
    peek = play_match(informed, UninformedStrategy("i_clairvoyant"), N, seed=1, p0=[0.5, 0.5])
    assert peek.mean >= value - 3 * peek.se
    noise = play_match(informed, UninformedStrategy("uniform"), N, seed=1, p0=[0.5, 0.5])
    for res in (best, low, peek, noise):
        assert abs(res.decomposed - res.mean) <= 1e-12
        for tr in res.transcripts:
            assert tr.total == pytest.approx(tr.stage.sum(), abs=1e-12)
    for res in (best, low, noise):
        assert abs(res.terminal_pairing - res.running_pairing) <= 3 * res.pairing_se + 1e-12


def test_match_on_custom_game():
    """A game with genuinely mixed revelation: the identity still holds."""
    L = np.array([[[1.0, -1.0], [0.0, 0.5]], [[0.0, 1.0], [1.5, -0.5]]])
    spec = tensor_spec(L, [0, 1], [0, 1], 1.0)
    table = solve_backward(spec, TimeGrid(0, 1, 40), make_grid(2, 80))
    strat = synthesize_informed(table)
    value = table.at(0.0, [0.4, 0.6])
    res = play_match(strat, posterior_best_response(spec), 20000, seed=3, p0=[0.4, 0.6])
    assert abs(res.mean - value) <= 3 * res.se + 0.02
    assert abs(res.terminal_pairing - res.running_pairing) <= 3 * res.pairing_se + 1e-12
