import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multiflow.errors import DegeneratePadeError, PoleEvaluationError
from multiflow.pade import (PadeApproximant, denominator_real_roots, is_doublet,
                            matching_system_size, min_pole, min_pole_from_roots, pade_degrees,
                            pade_eval, pade_from_series)


def matching_defect(p, c):
    """Relative violation of den * c = num through the approximant's order."""
    n = p.order
    prod = np.convolve(p.denominator, c[:n + 1])[:n + 1]
    num = np.zeros(n + 1, dtype=prod.dtype)
    num[:len(p.numerator)] = p.numerator
    scale = np.convolve(np.abs(p.denominator), np.abs(c[:n + 1]))[:n + 1]
    return np.max(np.abs(prod - num) / np.maximum(scale, 1e-300))


def test_geometric_series():
    p = pade_from_series([1.0, 1.0, 1.0])
    np.testing.assert_allclose(p.numerator, [1.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(p.denominator, [1.0, -1.0], atol=1e-12)
    np.testing.assert_allclose(denominator_real_roots(p), [1.0])
    assert pade_eval(p, 0.5) == pytest.approx(2.0)


def test_ratio_two_geometric():
    p = pade_from_series([1.0, 2.0, 4.0, 8.0, 16.0])
    roots = denominator_real_roots(p)
    assert roots[0] == pytest.approx(0.5)


def test_constant_series_falls_back():
    p = pade_from_series([1.0, 0, 0, 0, 0])
    assert p.order == 0
    np.testing.assert_allclose(p.numerator, [1.0])
    np.testing.assert_allclose(p.denominator, [1.0])
    with pytest.raises(DegeneratePadeError):
        pade_from_series([1.0, 0, 0, 0, 0], allow_fallback=False)


def test_needs_two_coefficients():
    with pytest.raises(ValueError):
        pade_from_series([1.0])


@given(st.integers(1, 30))
def test_degree_rule(n):
    n_num, n_den = pade_degrees(n)
    assert n_num + n_den == n
    assert n_num - n_den in (0, 1)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 16), st.integers(0, 2 ** 31 - 1))
def test_reexpansion_matches_series(n, seed):
    rng = np.random.default_rng(seed)
    c = rng.normal(size=n + 1) * 0.7 ** np.arange(n + 1)
    p = pade_from_series(c)
    assert p.denominator[0] == 1.0
    n_num, n_den = p.degrees
    assert n_num >= n_den
    assert matching_defect(p, c) < 1e-9


def test_complex_series():
    c = np.array([1, 1j, -0.5, -1j / 6, 1 / 24])     # exp(i t)
    p = pade_from_series(c)
    assert p.numerator.dtype.kind == "c"
    assert matching_defect(p, c) < 1e-12
    assert abs(pade_eval(p, 0.1) - np.exp(0.1j)) < 1e-7


@pytest.mark.parametrize("n", [2, 3, 4])
def test_exactness_slope(n):
    rng = np.random.default_rng(n)
    rho = 30.0
    c = rng.uniform(0.5, 1.5, size=n + 1) * rho ** np.arange(n + 1)
    p = pade_from_series(c)
    assert p.order == n
    alphas = np.logspace(-4, -2, 9)
    series = np.array([np.polyval(c[::-1], a) for a in alphas])
    diff = np.abs(pade_eval(p, alphas) - series)
    slope = np.polyfit(np.log(alphas), np.log(diff), 1)[0]
    assert slope >= n + 0.5


@pytest.mark.parametrize("fn, coef, x, tol", [
    (math.exp, [1 / math.factorial(k) for k in range(16)], 2.0, 1e-10),
    (lambda x: math.log1p(x), [0.0] + [(-1) ** (k + 1) / k for k in range(1, 16)], 0.9, 1e-7),
    (lambda x: math.sqrt(1 + x), [math.comb(1, 0)] + [
        np.prod([0.5 - j for j in range(k)]) / math.factorial(k) for k in range(1, 16)], 3.0, 1e-6),
])
def test_continuation_beyond_radius(fn, coef, x, tol):
    # log1p and sqrt(1+x) have radius 1; the approximant reaches further
    p = pade_from_series(np.array(coef, dtype=float))
    assert abs(pade_eval(p, x) - fn(x)) < tol


def test_eval_at_pole():
    p = PadeApproximant(np.array([1.0]), np.array([1.0, -1.0]))
    with pytest.raises(PoleEvaluationError):
        pade_eval(p, 1.0)
    assert pade_eval(p, 0.0) == 1.0


def test_real_roots_filters_complex_pair():
    p = PadeApproximant(np.array([1.0]), np.array([1.0, 0.0, 1.0]))
    assert len(denominator_real_roots(p)) == 0


def test_near_real_widening():
    z = -0.5 + 0.01j
    den = np.real(np.poly([z, np.conj(z)])[::-1]) / abs(z) ** 2
    p = PadeApproximant(np.array([1.0]), den)
    assert len(denominator_real_roots(p)) == 0
    np.testing.assert_allclose(denominator_real_roots(p, rel_imag=0.05), [-0.5, -0.5])
    assert min_pole([p], -1) == pytest.approx(-0.5)
    assert min_pole([p], -1, rel_imag=0.0) is None


def test_zero_denominator_is_degenerate():
    p = PadeApproximant(np.array([1.0]), np.array([0.0, 0.0]))
    with pytest.raises(DegeneratePadeError):
        denominator_real_roots(p)


def test_min_pole_from_roots_examples():
    assert min_pole_from_roots([0.8, -0.3, 1.2], +1) == pytest.approx(0.8)
    assert min_pole_from_roots([-0.3], +1) is None
    assert min_pole_from_roots([-0.3, -0.1], -1) == pytest.approx(-0.1)


def _with_poles(poles, zeros=()):
    den = np.real(np.poly(poles)[::-1])
    den = den / den[0]
    num = np.real(np.poly(zeros)[::-1]) if zeros else np.array([1.0])
    return PadeApproximant(num / num[0], den)


def test_min_pole_is_min_reduction():
    rng = np.random.default_rng(3)
    pades, per = [], []
    for _ in range(35):
        poles = list(rng.uniform(-3, 3, size=3))
        pades.append(_with_poles(poles))
        per.append(min_pole_from_roots(poles, +1))
    expected = min((x for x in per if x is not None), default=None)
    assert min_pole(pades, +1) == pytest.approx(expected)


def test_doublet_dropped():
    p = _with_poles([0.4, 2.0], zeros=[0.4 + 1e-9])
    assert is_doublet(p, 0.4)
    assert min_pole([p], +1) == pytest.approx(2.0)
    assert min_pole([p], +1, drop_doublets=False) == pytest.approx(0.4)


def test_matching_system_size():
    assert matching_system_size(15) == 32
