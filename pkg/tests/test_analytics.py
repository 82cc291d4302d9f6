from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest

from spinwire import analytics, chains
from spinwire.errors import FitError
from spinwire.spectral import diagonalize


def exact_binomial(n):
    return [Fraction(math.comb(n, l), 2**n) for l in range(n + 1)]


@pytest.mark.parametrize("n", [0, 1, 2, 7, 40, 60])
def test_binomials_match_big_integer_oracle(n):
    got = analytics.binomial_probabilities(n)
    for g, e in zip(got, exact_binomial(n)):
        assert g == float(e)


def test_log_gamma_path_continuity():
    n = 200
    got = analytics.binomial_probabilities(n)
    ref = np.array([float(x) for x in exact_binomial(n)])
    np.testing.assert_allclose(got, ref, rtol=1e-11)
    assert math.fsum(got) == pytest.approx(1.0, abs=1e-13)


def test_krawtchouk_small_rows():
    np.testing.assert_allclose(analytics.krawtchouk_ground_amplitudes(2) ** 2, [0.25, 0.5, 0.25])
    assert list(analytics.krawtchouk_ground_amplitudes(0)) == [1.0]
    assert analytics.krawtchouk_ground_amplitudes(40)[20] ** 2 == pytest.approx(
        math.comb(40, 20) / 2**40, rel=1e-15
    )


@pytest.mark.parametrize("n", [1, 6, 17, 64])
def test_krawtchouk_is_linear_chain_ground_state(n):
    es = diagonalize(chains.build_pst_linear(n + 1), full=True)
    np.testing.assert_allclose(
        np.abs(es.vectors[:, 0]), analytics.krawtchouk_ground_amplitudes(n), atol=1e-10
    )


def test_gaussian_centre_value():
    g = analytics.gaussian_approx_probabilities(40)
    assert g[20] == pytest.approx(math.sqrt(2 / (40 * math.pi)), rel=1e-15)
    exact = math.comb(40, 20) / 2**40
    assert abs(g[20] / exact - 1) <= 0.01


def test_gaussian_symmetric_and_central_agreement():
    n = 40
    g = analytics.gaussian_approx_probabilities(n)
    np.testing.assert_array_equal(g, g[::-1])
    exact = analytics.binomial_probabilities(n)
    rel = np.abs(g / exact - 1)
    # 0.84% at |l - 20| = 4, 1.20% at |l - 20| = 5 (exact binomial)
    assert np.max(rel[16:25]) <= 0.01
    assert rel[15] == pytest.approx(0.01203, abs=1e-5)


def test_gaussian_agreement_improves_with_n():
    errs = []
    for n in (20, 40, 80, 160):
        half = int(round(math.sqrt(n) / 2))
        l = np.arange(n // 2 - half, n // 2 + half + 1)
        g = analytics.gaussian_approx_probabilities(n)
        e = analytics.binomial_probabilities(n)
        errs.append(np.max(np.abs(g[l] / e[l] - 1)))
    assert all(a > b for a, b in zip(errs, errs[1:]))


def test_reference_table_shape_and_symmetry():
    rows = analytics.binomial_reference_table(40)
    assert len(rows) == 41
    te = np.array([r[3] for r in rows])
    tg = np.array([r[4] for r in rows])
    for col in (te, tg):
        np.testing.assert_allclose(col, col[::-1], atol=1e-12)
        assert col[20] == 0.0
        assert np.all(np.diff(col[:21]) > 0)


@pytest.mark.parametrize("shape,model,params", [
    ("lorentzian", analytics.lorentzian, (25.3, 4.1, 0.9)),
    ("gaussian", analytics.gaussian, (-0.2, 0.7, 0.05)),
])
def test_synthetic_fit_recovers_parameters(shape, model, params):
    x = np.linspace(-10, 60, 301) if shape == "lorentzian" else np.linspace(-3, 3, 201)
    fit = analytics.fit_distribution(x, model(x, *params), shape)
    assert fit.center == pytest.approx(params[0], abs=1e-8)
    assert fit.width == pytest.approx(params[1], rel=1e-8)
    assert fit.amplitude == pytest.approx(params[2], rel=1e-8)
    assert fit.residual < 1e-10


def test_fit_failure():
    with pytest.raises(FitError):
        analytics.fit_distribution(np.arange(5.0), np.array([1.0, np.nan, 1.0, 1.0, 1.0]), "gaussian")


def test_linear_pst_gaussian_scaling():
    n = 400
    fit = analytics.fit_pk1(diagonalize(chains.build_pst_linear(n)), "gaussian", abscissa="energy")
    assert fit.amplitude * math.sqrt(n) == pytest.approx(0.8, rel=0.1)
    assert fit.width * math.sqrt(n) == pytest.approx(2.0, rel=0.1)


def test_optimal_boundary_lorentzian_width():
    n = 400
    fit = analytics.fit_pk1(diagonalize(chains.build_ost_optimal(n)), "lorentzian")
    assert fit.center == pytest.approx((n + 1) / 2, abs=0.5)
    assert fit.width == pytest.approx(float(analytics.lorentzian_width_reference(n)), rel=0.15)


def test_weak_coupling_dominance():
    even = analytics.dominant_probabilities_weak(diagonalize(chains.build_ost(100, 1e-3)))
    assert even.zero is None
    assert even.minus == pytest.approx(0.5, abs=0.01) and even.plus == pytest.approx(0.5, abs=0.01)
    odd = analytics.dominant_probabilities_weak(diagonalize(chains.build_ost(101, 1e-3)))
    assert odd.zero == pytest.approx(0.5, abs=0.01)
    assert odd.minus == pytest.approx(0.25, abs=0.01) and odd.plus == pytest.approx(0.25, abs=0.01)


def test_homogeneous_passes_through_raw_values():
    es = diagonalize(chains.build_homogeneous(9))
    cp = analytics.dominant_probabilities_weak(es)
    assert cp.zero == pytest.approx(es.occ_first[4])
    assert cp.total < 0.9


@pytest.mark.parametrize("n", [21, 51, 101, 201])
def test_quadratic_odd_central_window(n):
    es = diagonalize(chains.build_pst_quadratic(n))
    assert analytics.central_window_mass(es, 5) >= 0.99


@pytest.mark.parametrize("n", [20, 50, 100, 200])
def test_quadratic_even_central_window(n):
    # the unique persymmetric chain puts ~0.98 on four states, > 0.99 on six
    es = diagonalize(chains.build_pst_quadratic(n))
    assert analytics.central_window_mass(es, 4) >= 0.97
    assert analytics.central_window_mass(es, 6) >= 0.99
