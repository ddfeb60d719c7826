import math

import numpy as np
import pytest

from onesided.errors import SpecError
from onesided.games import (
    eval_hamiltonian,
    isaacs_gap_scan,
    lipschitz_estimate,
    load_builtin,
    tensor_spec,
)
from onesided.simplex import make_grid
from oracles import cex_Lambda, matrix_minmax

PAYOFF_R1 = np.array([[-2.0, 0.0], [0.0, 2.0]])  # u + v on {-1, 1}^2
PAYOFF_R2 = np.array([[-1.0, 3.0], [-3.0, 1.0]])  # -u + 2v


def test_reveal_tensor_matches_hand_table():
    spec = load_builtin("reveal")
    L = spec.payoff_tensor(0.0)
    np.testing.assert_array_equal(L[0], PAYOFF_R1)
    np.testing.assert_array_equal(L[1], PAYOFF_R2)


def test_reveal_hamiltonian_half():
    spec = load_builtin("reveal")
    res = eval_hamiltonian(spec, 0.3, [0.5, 0.5])
    assert res.value == pytest.approx(1.5, abs=1e-15)
    assert res.isaacs_gap == 0.0
    oracle, _ = matrix_minmax(0.5 * PAYOFF_R1 + 0.5 * PAYOFF_R2)
    assert res.value == oracle


@pytest.mark.parametrize("p1", np.linspace(0, 1, 11))
def test_reveal_hamiltonian_against_enumeration(p1):
    spec = load_builtin("reveal")
    res = eval_hamiltonian(spec, 0.0, [p1, 1 - p1])
    minmax, maxmin = matrix_minmax(p1 * PAYOFF_R1 + (1 - p1) * PAYOFF_R2)
    assert res.value == pytest.approx(minmax, abs=1e-12)
    assert res.isaacs_gap == pytest.approx(minmax - maxmin, abs=1e-12)
    # the returned controls reproduce the value
    L = spec.payoff_tensor(0.0)
    again = p1 * L[0, res.u_index, res.v_index] + (1 - p1) * L[1, res.u_index, res.v_index]
    assert again == pytest.approx(res.value, abs=1e-12)


def test_constant_payoffs():
    c = np.array([0.7, -1.3, 2.0])
    L = np.broadcast_to(c[:, None, None], (3, 2, 3))
    spec = tensor_spec(L, [0, 1], [0, 1, 2], 1.0)
    res = eval_hamiltonian(spec, 0.0, [0.2, 0.3, 0.5])
    assert res.value == pytest.approx(0.2 * 0.7 - 0.3 * 1.3 + 1.0, abs=1e-12)
    assert res.isaacs_gap == 0.0
    assert (res.u_index, res.v_index) == (0, 0)


def test_ex1_hamiltonian_center():
    spec = load_builtin("ex1")
    res = eval_hamiltonian(spec, 0.0, [0.5, 0.5])
    assert res.value == pytest.approx(2 * math.sqrt(2), abs=1e-14)
    assert res.isaacs_gap == 0.0


def test_ex1_saddle_control_on_lower_edge():
    spec = load_builtin("ex1")
    h1, _ = spec.band
    p = float(h1(0.5))
    assert eval_hamiltonian(spec, 0.5, [p, 1 - p]).u == 1.0
    assert eval_hamiltonian(spec, 0.5, [1 - p, p]).u == -1.0


def test_ex1_payoff_form_reproduces_formula():
    # the sampled payoff instance should agree with the closed-form H
    direct = load_builtin("ex1")
    sampled = load_builtin("ex1", {"form": "payoff", "n_u": 41, "n_v": 2880})
    P = np.array([[0.5, 0.5], [0.2, 0.8], [0.9, 0.1]])
    for t in (0.0, 0.6):
        np.testing.assert_allclose(sampled.H(t, P), direct.H(t, P), atol=2e-3)


def test_ex1_band_values():
    spec = load_builtin("ex1")
    h1, h2 = spec.band
    assert h1(1.0) == pytest.approx(0.5 - 1 / math.sqrt(14), abs=1e-15)
    assert h1(1.0) == pytest.approx(0.2327387580875756, abs=1e-15)
    assert h2(0.3) == pytest.approx(1 - h1(0.3), abs=1e-15)


@pytest.mark.parametrize("params", [{"alpha_end": 2.0}, {"alpha_start": 1.5}, {"alpha_start": 3, "alpha_end": 3.5}])
def test_ex1_rejects_bad_alpha(params):
    with pytest.raises(SpecError):
        load_builtin("ex1", params)


def test_counterexample_lambda():
    spec = load_builtin("counterexample")
    Lam = spec.params["Lam"]
    assert spec.params["a"] == pytest.approx(0.4)
    assert Lam(0.4) == pytest.approx(0.0, abs=1e-15)
    for t in (0.0, 0.3, 0.55, 0.8):
        assert Lam(t) == pytest.approx(cex_Lambda(t), abs=1e-12)
        assert Lam(t) == pytest.approx(0.2 - 0.7 * t + 0.5 * t * t, abs=1e-15)


def test_azema_band():
    h1, h2 = load_builtin("azema_h").band
    assert h1(1 / 16) == 0.25
    assert h2(1 / 16) == 0.75


def test_azema_has_no_hamiltonian():
    spec = load_builtin("azema_h")
    with pytest.raises(SpecError):
        spec.H(0.0, [[0.5, 0.5]])


def test_unknown_fixture():
    with pytest.raises(SpecError):
        load_builtin("nope")
    with pytest.raises(SpecError):
        load_builtin("reveal", {"x": 1})


def test_gap_scan_separable_and_pennies():
    P = np.random.default_rng(1).dirichlet([1, 1], size=40)
    rep = isaacs_gap_scan(load_builtin("reveal"), [0.0, 0.5], P)
    assert rep.max_gap == 0.0 and not rep.flagged
    uv = np.array([[1.0, -1.0], [-1.0, 1.0]])
    pennies = tensor_spec(np.stack([uv, uv]), [-1, 1], [-1, 1], 1.0)
    rep = isaacs_gap_scan(pennies, [0.0], P)
    assert rep.max_gap == pytest.approx(2.0)
    assert rep.flagged
    with pytest.raises(SpecError):
        isaacs_gap_scan(load_builtin("ex1"), [0.0], P)


def test_lipschitz_bound_for_payoff_spec():
    spec = load_builtin("reveal")
    g = make_grid(2, 50)
    Ht = spec.H_table([0.0], g.points)
    kappa = np.abs(spec.payoff_tensor(0.0)).max() * math.sqrt(2)
    assert lipschitz_estimate(Ht, g) <= kappa + 1e-12


def test_tensor_spec_validation():
    with pytest.raises(SpecError):
        tensor_spec(np.zeros((2, 2, 2)), [0, 0], [0, 1], 1.0)
    with pytest.raises(SpecError):
        tensor_spec(np.zeros((2, 3, 2)), [0, 1], [0, 1], 1.0)
    with pytest.raises(SpecError):
        tensor_spec(np.zeros((2, 2, 2)), [0, 1], [0, 1], 0.0)
