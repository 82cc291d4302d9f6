"""Closed-form reference curves and fits of the boundary occupation P_{k,1}."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import curve_fit
from scipy.special import gammaln

from spinwire.errors import FitError
from spinwire.spectral import EigenSystem

EXACT_BINOMIAL_MAX = 60


class Shape(str, Enum):
    LORENTZIAN = "lorentzian"
    GAUSSIAN = "gaussian"


@dataclass
class DistributionFit:
    shape: Shape
    center: float
    width: float
    amplitude: float
    residual: float
    abscissa: str = "index"


def binomial_probabilities(n: int) -> np.ndarray:
    """binom(n, l) / 2^n for l = 0..n.

    Exact integers for n <= 60, log-gamma above that.
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if n <= EXACT_BINOMIAL_MAX:
        return np.array([math.comb(n, l) for l in range(n + 1)], dtype=float) / 2.0**n
    l = np.arange(n + 1)
    return np.exp(gammaln(n + 1) - gammaln(l + 1) - gammaln(n - l + 1) - n * math.log(2.0))


def krawtchouk_ground_amplitudes(n: int) -> np.ndarray:
    """phi_0(l) = sqrt(binom(n, l) / 2^n) on the n + 1 sites of the chain with n couplings."""
    return np.sqrt(binomial_probabilities(n))


def gaussian_approx_probabilities(n: int) -> np.ndarray:
    """sqrt(2 / (n pi)) exp(-(2/n)(l - n/2)^2), approximating |phi_0(l)|^2."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    l = np.arange(n + 1, dtype=float)
    # (2l - n)^2 / (2n) keeps the l <-> n - l symmetry exact in floating point
    return math.sqrt(2.0 / (n * math.pi)) * np.exp(-((2.0 * l - n) ** 2) / (2.0 * n))


def log_profile_transform(p: np.ndarray, center_index: int) -> np.ndarray:
    """-sqrt(-ln(P / P_center)): a Gaussian becomes two straight lines."""
    ratio = np.asarray(p, dtype=float) / p[center_index]
    # + 0.0 turns -0 at the centre into 0
    return -np.sqrt(np.maximum(-np.log(ratio), 0.0)) + 0.0


def binomial_reference_table(n: int) -> list[tuple]:
    """Rows (l, exact, gaussian, transform_exact, transform_gauss) for l = 0..n."""
    exact = binomial_probabilities(n)
    gauss = gaussian_approx_probabilities(n)
    mid = n // 2
    te = log_profile_transform(exact, mid)
    tg = log_profile_transform(gauss, mid)
    return [(l, exact[l], gauss[l], te[l], tg[l]) for l in range(n + 1)]


def lorentzian(x, x0, gamma, amp):
    return amp / math.pi * gamma / ((x - x0) ** 2 + gamma**2)


def gaussian(x, x0, sigma, amp):
    return amp * np.exp(-((x - x0) ** 2) / (2.0 * sigma**2))


def fit_distribution(x, p, shape) -> DistributionFit:
    """Least-squares Lorentzian or Gaussian fit of p(x).

    Starts from the argmax and the second moment of the window where p
    exceeds a tenth of its peak.
    """
    shape = Shape(shape)
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    i0 = int(np.argmax(p))
    sel = p >= 0.1 * p[i0]
    w = p[sel] / p[sel].sum()
    x0 = float(np.sum(w * x[sel]))
    spread = math.sqrt(max(float(np.sum(w * (x[sel] - x0) ** 2)), 1e-30))
    if shape is Shape.GAUSSIAN:
        model, p0 = gaussian, (x[i0], spread, p[i0])
    else:
        model, p0 = lorentzian, (x[i0], spread, p[i0] * math.pi * spread)
    try:
        popt, _ = curve_fit(model, x, p, p0=p0, maxfev=20000, xtol=1e-14, ftol=1e-14)
    except (RuntimeError, ValueError) as exc:
        raise FitError(f"{shape.value} fit failed: {exc}") from exc
    x0, width, amp = popt
    residual = float(np.linalg.norm(model(x, *popt) - p))
    if not (np.all(np.isfinite(popt)) and amp > 0):
        raise FitError(f"{shape.value} fit returned unusable parameters {popt}")
    return DistributionFit(shape, float(x0), abs(float(width)), float(amp), residual)


def fit_pk1(es: EigenSystem, shape, abscissa: str = "index") -> DistributionFit:
    """Fit P_{k,1} against the 1-based eigenstate index k or against E_k.

    ``abscissa="energy"`` gives widths in units of J_max, the convention in
    which the linear-PST Gaussian width is quoted.
    """
    if abscissa == "index":
        x = np.arange(1, es.n + 1, dtype=float)
    elif abscissa == "energy":
        x = es.energies
    else:
        raise ValueError(f"abscissa must be 'index' or 'energy', got {abscissa!r}")
    fit = fit_distribution(x, es.occ_first, shape)
    fit.abscissa = abscissa
    return fit


@dataclass
class CentralProbabilities:
    """Boundary occupation of the states nearest E = 0.

    Even N: ``minus``/``plus`` are k_- = N/2 and k_+ = N/2 + 1 and ``zero`` is
    None.  Odd N: ``zero`` is the E = 0 state and ``minus``/``plus`` its
    neighbours.
    """

    minus: float
    plus: float
    zero: float | None = None

    @property
    def total(self) -> float:
        return self.minus + self.plus + (self.zero or 0.0)


def dominant_probabilities_weak(es: EigenSystem) -> CentralProbabilities:
    p = es.occ_first
    n = es.n
    if n % 2 == 0:
        return CentralProbabilities(float(p[n // 2 - 1]), float(p[n // 2]))
    c = (n - 1) // 2
    if n == 1:
        return CentralProbabilities(0.0, 0.0, float(p[0]))
    return CentralProbabilities(float(p[c - 1]), float(p[c + 1]), float(p[c]))


def central_window_mass(es: EigenSystem, n_states: int) -> float:
    """Total P_{k,1} of the ``n_states`` states closest to the band centre."""
    order = np.argsort(np.abs(es.energies), kind="stable")
    return math.fsum(es.occ_first[order[:n_states]])


def lorentzian_width_reference(n) -> np.ndarray:
    """Gamma = (10/N)^-0.63, the quoted optimal-boundary Lorentzian width (index units)."""
    return (10.0 / np.asarray(n, dtype=float)) ** -0.63
