import numpy as np
import pytest

from multiflow import build_system, load_case, regularize_lossless
from multiflow.case_model import parse_case
from multiflow.curve_design import design_curves, parameterized_residual
from multiflow.enumerator import initial_solution
from multiflow.errors import DegenerateVoltageError
from multiflow.hem_core import (cauchy, embed_at_point, embedding_dimension, embedding_matrix,
                                evaluate_series, evaluate_state, series_coefficients)
from multiflow.pc_engine import newton_correct

from conftest import TWO_BUS


@pytest.fixture(scope="module")
def base9():
    net = regularize_lossless(load_case("case9"))
    sys_ = build_system(net)
    return sys_, initial_solution(net, sys_), design_curves(sys_)


def test_dimension_case9(base9):
    sys_, u, dirs = base9
    assert embedding_dimension(sys_) == 35
    a = embedding_matrix(sys_, embed_at_point(sys_, dirs[0], u, 0.0))
    assert a.shape == (35, 35)


@pytest.mark.parametrize("name", ["case4gs", "case6ww", "case9", "case14", "case30"])
def test_dimension_per_case(name):
    net = load_case(name)
    sys_ = build_system(net)
    u = initial_solution(regularize_lossless(net)) if name != "case30" else None
    assert embedding_dimension(sys_) == 4 * net.n_bus + net.n_gen - 3
    if u is not None:
        series = series_coefficients(sys_, embed_at_point(sys_, design_curves(sys_)[1], u, 0.0), 4)
        assert series.system_size == embedding_dimension(sys_)


def test_base_point_data(base9):
    sys_, u, dirs = base9
    net = sys_.network
    c = embed_at_point(sys_, dirs[2], u, 0.0)
    for k, b in enumerate(net.buses):
        if b.kind.value != "Slack":
            assert c.p0[k] == pytest.approx(b.p_injection, abs=1e-8)
        if b.kind.value == "PQ":
            assert c.q0[k] == pytest.approx(b.q_injection, abs=1e-8)
    doubled = type(dirs[2])(dirs[2].l, 2 * dirs[2].d)
    c2 = embed_at_point(sys_, doubled, u, 0.0)
    np.testing.assert_allclose(c2.k_p, 2 * c.k_p)
    np.testing.assert_allclose(c2.k_q, 2 * c.k_q)
    np.testing.assert_allclose(c2.k_v, 2 * c.k_v)
    np.testing.assert_allclose(c2.p0, c.p0)


def test_zero_voltage_rejected(base9):
    sys_, u, dirs = base9
    bad = u.copy()
    bad[3] = 0.0
    bad[sys_.n_bus + 2] = 0.0     # bus 4 imaginary part (slack is bus 1)
    with pytest.raises(DegenerateVoltageError):
        embed_at_point(sys_, dirs[0], bad, 0.0)


def test_slack_recursion_examples(base9):
    # only the slack magnitude equation carries K: K_s = 0.2 with v_s0 = 1
    sys_, u, dirs = base9
    net = sys_.network
    d = dirs[0]
    assert sys_.eq_kind[0] == (net.slack, "V2")
    series = series_coefficients(sys_, embed_at_point(sys_, type(d)(1, 0.2 * d.d), u, 0.0), 6)
    vs0 = series.v[0, net.slack].real
    assert series.v[1, net.slack].real == pytest.approx(0.2 / (2 * vs0))
    v1 = series.v[1, net.slack].real
    assert series.v[2, net.slack].real == pytest.approx(-v1 * v1 / (2 * vs0))


@pytest.mark.parametrize("l", [1, 2, 5, 9, 17])
def test_cauchy_identities(base9, l):
    sys_, u, dirs = base9
    d = dirs[l - 1]
    c = embed_at_point(sys_, d, u, 0.0)
    s = series_coefficients(sys_, c, 15)
    net = sys_.network
    one = np.zeros(16)
    one[0] = 1.0
    for k, b in enumerate(net.buses):
        if k != net.slack:
            np.testing.assert_allclose(cauchy(s.v[:, k], s.w[:, k]), one, atol=1e-10)
        if b.kind.value != "PQ":
            mag = cauchy(s.v[:, k], np.conj(s.v[:, k])).real
            want = np.zeros(16)
            want[0] = c.vm2[k]
            want[1] = c.k_v[k]
            np.testing.assert_allclose(mag, want, atol=1e-10)


def test_reflectivity_balance(base9):
    # truncated series satisfy the curve equations at small real alpha
    sys_, u, dirs = base9
    d = dirs[4]
    s = series_coefficients(sys_, embed_at_point(sys_, d, u, 0.0), 15)
    for a in (-0.05, 0.02, 0.05):
        r = parameterized_residual(sys_, d, evaluate_state(s, a), a)
        assert np.max(np.abs(r)) < 1e-9


@pytest.mark.parametrize("i_max", [3, 5])
def test_truncation_slope(base9, i_max):
    sys_, u, dirs = base9
    d = dirs[4]
    s = series_coefficients(sys_, embed_at_point(sys_, d, u, 0.0), i_max)
    alphas = np.logspace(-2, -1, 6)
    res = [np.max(np.abs(parameterized_residual(sys_, d, evaluate_state(s, a), a)))
           for a in alphas]
    slope = np.polyfit(np.log(alphas), np.log(res), 1)[0]
    assert slope >= i_max + 0.5


def test_evaluate_series_small_alpha(base9):
    sys_, u, dirs = base9
    s = series_coefficients(sys_, embed_at_point(sys_, dirs[3], u, 0.0), 15)
    v0, q0 = evaluate_series(s, 0.0)
    np.testing.assert_array_equal(v0, s.v[0])
    a = 1e-8
    v, _ = evaluate_series(s, a)
    np.testing.assert_allclose((v - v0) / a, s.v[1], rtol=1e-6, atol=1e-9)


def test_two_bus_matches_fine_newton():
    net = parse_case(TWO_BUS)
    sys_ = build_system(net)
    u0 = initial_solution(net, sys_)
    d = design_curves(sys_)[1]            # P at bus 2
    s = series_coefficients(sys_, embed_at_point(sys_, d, u0, 0.0), 15)
    u, a = u0.copy(), 0.0
    for target in np.linspace(0.0, 0.3, 301)[1:]:
        u = newton_correct(sys_, d, u, target, tol=1e-13).point.u
        a = target
    np.testing.assert_allclose(evaluate_state(s, a), u, atol=1e-6)


def test_i_max_validation(base9):
    sys_, u, dirs = base9
    with pytest.raises(ValueError):
        series_coefficients(sys_, embed_at_point(sys_, dirs[0], u, 0.0), 0)
