from __future__ import annotations

import numpy as np
import pytest
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import least_squares

from spinwire import synthesis
from spinwire.chains import build_pst_linear
from spinwire.errors import InfeasibleSpectrumError, SynthesisError


def test_pst_spectra_small():
    np.testing.assert_array_equal(synthesis.pst_spectrum(3, 1).values, [-1, 0, 1])
    np.testing.assert_array_equal(synthesis.pst_spectrum(4, 1).values, [-1.5, -0.5, 0.5, 1.5])
    np.testing.assert_array_equal(synthesis.pst_spectrum(5, 2).values, [-4, -1, 0, 1, 4])
    np.testing.assert_array_equal(synthesis.pst_spectrum(4, 2).values, [-3.5, -0.5, 0.5, 3.5])


@pytest.mark.parametrize(
    "values",
    [[0.0, 0.0, 1.0], [-1.0, 0.0, 2.0], [1.0, 0.0, -1.0], [0.0], [-1.0, np.nan, 1.0]],
)
def test_infeasible_targets(values):
    with pytest.raises(InfeasibleSpectrumError):
        synthesis.TargetSpectrum(values)


@pytest.mark.parametrize("n", [2, 3, 4, 5, 10, 31, 64, 101])
def test_linear_round_trip_matches_closed_form(n):
    # the linear spectrum is realized by sqrt(i (N - i)) / 2
    b = synthesis.reconstruct_jacobi(synthesis.pst_spectrum(n, 1))
    i = np.arange(1, n)
    np.testing.assert_allclose(b, 0.5 * np.sqrt(i * (n - i)), rtol=1e-8)
    np.testing.assert_allclose(b / b.max(), build_pst_linear(n).couplings, rtol=1e-8)


@pytest.mark.parametrize("n", [4, 5, 8, 9, 50, 51, 128])
def test_quadratic_reproduces_target(n):
    target = synthesis.pst_spectrum(n, 2)
    b = synthesis.reconstruct_jacobi(target)
    got = eigh_tridiagonal(np.zeros(n), b, eigvals_only=True)
    scale = np.abs(target.values).max()
    assert np.abs(got - target.values).max() / scale <= 1e-10
    rep = synthesis.synthesis_report(b, target)
    assert rep["spectral_residual"] <= 1e-10
    assert rep["symmetry_residual"] == 0.0


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_uniqueness_against_least_squares(n):
    """A symmetric positive coupling vector with the target spectrum is unique."""
    target = synthesis.pst_spectrum(n, 2).values
    b = synthesis.reconstruct_jacobi(target)
    half = n // 2
    rng = np.random.default_rng(n)

    def unpack(x):
        x = np.abs(x)
        return np.concatenate([x, x[: (n - 1) - len(x)][::-1]])

    def resid(x):
        return eigh_tridiagonal(np.zeros(n), unpack(x), eigvals_only=True) - target

    converged = 0
    for _ in range(8):
        sol = least_squares(resid, rng.uniform(0.3, 3.0, half), xtol=1e-15, ftol=1e-15, gtol=1e-15)
        if np.abs(sol.fun).max() < 1e-9:
            converged += 1
            np.testing.assert_allclose(unpack(sol.x), b, rtol=1e-6)
    assert converged > 0


def test_boundary_weights_match_dense_eigenvectors():
    n = 12
    b = synthesis.reconstruct_jacobi(synthesis.pst_spectrum(n, 2))
    h = np.diag(b, 1) + np.diag(b, -1)
    e, v = np.linalg.eigh(h)
    w = synthesis.boundary_weights(e / np.abs(e).max())
    np.testing.assert_allclose(w, v[0] ** 2, rtol=1e-9)


def test_large_n_synthesis_stays_accurate():
    target = synthesis.pst_spectrum(256, 2)
    b = synthesis.reconstruct_jacobi(target)
    assert synthesis.spectral_residual(b, target.values) < 1e-12


def test_tight_tolerance_reports_residual():
    with pytest.raises(SynthesisError) as info:
        synthesis.reconstruct_jacobi(synthesis.pst_spectrum(200, 2), tol=1e-30)
    assert info.value.residual is not None
