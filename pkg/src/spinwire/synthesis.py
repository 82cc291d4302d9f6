"""PST target spectra and the inverse eigenvalue problem for zero-diagonal Jacobi matrices.

A persymmetric Jacobi matrix with zero diagonal is fixed by its spectrum alone:
the squared first components of its eigenvectors are proportional to
``1 / |p'(E_k)|`` where ``p`` is the characteristic polynomial.  Running the
Lanczos recurrence on ``diag(E)`` from those weights returns the couplings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from spinwire.errors import InfeasibleSpectrumError, SynthesisError

_SYM_TOL = 1e-14


@dataclass(frozen=True)
class TargetSpectrum:
    """Sorted single-excitation energies, antisymmetric about zero.

    ``values`` are ``prefactor * sgn(k) * g(|k|)`` with ``g`` the linear or
    quadratic law; ``prefactor`` plays the role of pi/tau_pst.
    """

    values: np.ndarray
    exponent: int = 1
    prefactor: float = 1.0

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        check_spectrum(v)

    @property
    def n(self) -> int:
        return len(self.values)


def check_spectrum(values: np.ndarray) -> None:
    """Raise InfeasibleSpectrumError unless ``values`` is a valid target."""
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or len(v) < 2:
        raise InfeasibleSpectrumError("spectrum needs at least two values")
    if not np.all(np.isfinite(v)):
        raise InfeasibleSpectrumError("spectrum contains non-finite values")
    gaps = np.diff(v)
    if np.any(gaps <= 0):
        raise InfeasibleSpectrumError("spectrum must be strictly ascending (no degeneracies)")
    scale = max(1.0, float(np.abs(v).max()))
    asym = float(np.abs(v + v[::-1]).max())
    if asym > _SYM_TOL * scale:
        raise InfeasibleSpectrumError(f"spectrum is not symmetric about zero (residual {asym:.3e})")


def pst_spectrum(n: int, m: int) -> TargetSpectrum:
    """Commensurate PST spectrum with unit prefactor.

    Odd n: E = sgn(k)|k|^m for k = -(n-1)/2 .. (n-1)/2.
    Even n: k = -n/2 .. n/2 without zero, with |k| -> |k| - 1/2 (m=1)
    or |k|^2 -> |k^2 - 1/2| (m=2).
    """
    if n < 2:
        raise InfeasibleSpectrumError(f"n must be >= 2, got {n}")
    if m not in (1, 2):
        raise InfeasibleSpectrumError(f"only linear (1) and quadratic (2) exponents are supported, got {m}")
    if n % 2:
        h = (n - 1) // 2
        k = np.arange(-h, h + 1, dtype=float)
        mag = np.abs(k) ** m
    else:
        h = n // 2
        k = np.concatenate([np.arange(-h, 0), np.arange(1, h + 1)]).astype(float)
        mag = np.abs(k) - 0.5 if m == 1 else np.abs(k * k - 0.5)
    return TargetSpectrum(np.sign(k) * mag, exponent=m)


def boundary_weights(values: np.ndarray) -> np.ndarray:
    """Squared first eigenvector components of the persymmetric realization.

    w_k is proportional to 1/prod_{j != k} |E_k - E_j|; the products are
    accumulated as compensated sums of logarithms so N of a few hundred
    neither overflows nor underflows.
    """
    v = np.asarray(values, dtype=float)
    n = len(v)
    logw = np.empty(n)
    for k in range(n):
        diffs = np.abs(v[k] - np.delete(v, k))
        logw[k] = -math.fsum(np.log(diffs))
    logw -= logw.max()
    w = np.exp(logw)
    return w / math.fsum(w)


def lanczos_tridiagonal(values: np.ndarray, start: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Lanczos on diag(values) with full reorthogonalization.

    Returns the diagonal and off-diagonal of the resulting Jacobi matrix.
    Raises SynthesisError on a non-positive recurrence coefficient.
    """
    lam = np.asarray(values, dtype=float)
    n = len(lam)
    q = np.asarray(start, dtype=float)
    Q = np.zeros((n, n))
    Q[:, 0] = q / np.linalg.norm(q)
    diag = np.zeros(n)
    off = np.zeros(n - 1)
    for j in range(n):
        w = lam * Q[:, j]
        diag[j] = Q[:, j] @ w
        w -= diag[j] * Q[:, j]
        if j > 0:
            w -= off[j - 1] * Q[:, j - 1]
        # two passes of classical Gram-Schmidt ("twice is enough")
        for _ in range(2):
            w -= Q[:, : j + 1] @ (Q[:, : j + 1].T @ w)
        if j == n - 1:
            break
        beta = float(np.linalg.norm(w))
        if not beta > 0.0:
            raise SynthesisError(f"Lanczos breakdown at step {j + 1}: beta = {beta:.3e}", residual=None)
        off[j] = beta
        Q[:, j + 1] = w / beta
    return diag, off


def spectral_residual(couplings: np.ndarray, values: np.ndarray) -> float:
    """Max |eig(J) - target| with both scaled so max |target| = 1."""
    v = np.asarray(values, dtype=float)
    b = np.asarray(couplings, dtype=float)
    scale = float(np.abs(v).max())
    got = eigh_tridiagonal(np.zeros(len(v)), b / scale, eigvals_only=True)
    return float(np.abs(got - v / scale).max())


def symmetry_residual(couplings: np.ndarray) -> float:
    b = np.asarray(couplings, dtype=float)
    return float(np.abs(b - b[::-1]).max() / np.abs(b).max())


def reconstruct_jacobi(target, tol: float = 1e-10) -> np.ndarray:
    """Couplings of the mirror-symmetric zero-diagonal chain with spectrum ``target``.

    ``target`` is a TargetSpectrum or a plain array.  The result is in the
    same energy units as the target and is exactly persymmetric.
    """
    values = target.values if isinstance(target, TargetSpectrum) else np.asarray(target, dtype=float)
    check_spectrum(values)
    n = len(values)
    scale = float(np.abs(values).max())
    lam = values / scale
    _, off = lanczos_tridiagonal(lam, np.sqrt(boundary_weights(lam)))
    if np.any(off <= 0) or not np.all(np.isfinite(off)):
        raise SynthesisError("non-positive coupling in reconstruction", residual=None)
    sym = symmetry_residual(off)
    if sym > tol:
        raise SynthesisError(f"reconstructed couplings not persymmetric ({sym:.3e})", residual=sym)
    half = (n - 1) // 2
    mirrored = off.copy()
    # average the two halves, then copy so b_i == b_{N-i} bit for bit
    mirrored[:half] = 0.5 * (off[:half] + off[::-1][:half])
    mirrored[n - 1 - half :] = mirrored[:half][::-1]
    res = spectral_residual(mirrored, lam)
    if res > tol:
        raise SynthesisError(f"spectral residual {res:.3e} exceeds tol {tol:.1e}", residual=res)
    return mirrored * scale


def synthesis_report(couplings: np.ndarray, target) -> dict:
    values = target.values if isinstance(target, TargetSpectrum) else np.asarray(target, dtype=float)
    return {
        "spectral_residual": spectral_residual(couplings, values),
        "symmetry_residual": symmetry_residual(couplings),
    }
