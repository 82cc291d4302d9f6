"""Transfer amplitude, Bloch-averaged fidelity and transfer-time detection.

Times are in units of 1/J_max with hbar = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from spinwire.chains import ChainSpec, Family
from spinwire.errors import NoTransferError, NotApplicableError, UnsupportedFamilyError
from spinwire.spectral import EigenSystem, diagonalize

FIDELITY_FLOOR = 0.55
WINDOW_DROP = 0.05


@dataclass(frozen=True)
class TransferTime:
    tau: float
    f_at_tau: float
    window_width: float

    def __post_init__(self):
        for name in ("tau", "f_at_tau", "window_width"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def fidelity(self) -> float:
        return float(fidelity_from_abs(self.f_at_tau))


@dataclass(frozen=True, eq=False)
class FidelityTrace:
    times: np.ndarray
    fidelity: np.ndarray
    amplitude_sq: np.ndarray
    tau: float = math.nan
    f_at_tau: float = math.nan
    window_width: float = math.nan


def amplitude(es: EigenSystem, t):
    """f_N(t) = <N| exp(-iHt) |1> = sum_k a_{k,N} a_{k,1} exp(-i E_k t).

    Scalar ``t`` gives a complex scalar, an array gives an array.
    """
    t_arr = np.asarray(t, dtype=float)
    w = es.transfer_weights
    phases = np.exp(-1j * np.multiply.outer(t_arr, es.energies))
    return phases @ w


def fidelity_from_abs(abs_f):
    """F = |f|/3 + |f|^2/6 + 1/2 (phase corrected, cos(gamma) = 1)."""
    return abs_f / 3.0 + abs_f * abs_f / 6.0 + 0.5


def fidelity(es: EigenSystem, t):
    return fidelity_from_abs(np.abs(amplitude(es, t)))


def echo_amplitude_sq(es: EigenSystem, t):
    """|f_N(t)|^2 written as the double sum over (-1)^{k+s} P_k P_s exp(-i(E_k - E_s)t).

    Only valid for mirror-symmetric chains, where a_{k,N} = +-a_{k,1} with
    alternating sign along the ascending spectrum.
    """
    n = es.n
    sign = (-1.0) ** (np.arange(n) + n - 1)
    z = np.exp(-1j * np.multiply.outer(np.asarray(t, dtype=float), es.energies)) @ (sign * es.occ_first)
    return np.abs(z) ** 2


def transfer_time_estimate(spec: ChainSpec) -> float:
    """Closed-form transfer-time estimates in units of 1/J_max.

    The optimal-boundary chain returns the homogeneous value N/(2 J_max),
    which is a lower bound used to seed the search.
    """
    n = spec.n_sites
    j_max = spec.j_max
    fam = spec.family
    if fam in (Family.HOMOGENEOUS, Family.OST_OPTIMAL):
        return n / (2.0 * j_max)
    if fam is Family.OST_WEAK:
        # alpha J_max is the boundary coupling in units of the bulk coupling
        a = spec.alpha
        if n % 2:
            return math.pi * math.sqrt(n - 2) / (2.0 * a * j_max)
        return math.pi / (2.0 * a * a * j_max)
    if fam is Family.PST_LINEAR:
        return math.pi * n / (4.0 * j_max)
    if fam is Family.PST_QUADRATIC:
        return math.pi * n * n / (8.0 * j_max)
    raise UnsupportedFamilyError(f"no transfer-time estimate for family {fam!r}")


def pst_transfer_time(es: EigenSystem) -> float:
    """pi / (central spectral gap): exact first PST time for both PST laws."""
    n = es.n
    mid = n // 2
    gap = es.energies[mid] - es.energies[mid - 1]
    return math.pi / gap


def oscillation_diagnostics(n: int, alpha0: float, j_max: float = 1.0) -> tuple[float, float]:
    """Frequency and amplitude of the fast off-resonance wiggle of even weak-coupling chains."""
    if n % 2:
        raise NotApplicableError("odd chains transfer on resonance; no fast oscillation")
    if not alpha0 > 0:
        raise ValueError(f"alpha0 must be positive, got {alpha0}")
    x = alpha0 * alpha0 * n
    omega = math.pi * j_max / n * math.sqrt(x + 1.0)
    amp = 0.25 * x / (x + 1.0)
    return omega, amp


def _refine_max(es: EigenSystem, a: float, b: float, c: float, rtol: float) -> float:
    """Golden-section refinement of max |f|^2 inside the grid bracket (a, b, c)."""

    def neg(t):
        return -abs(amplitude(es, t)) ** 2

    fb = neg(b)
    if fb < neg(a) and fb < neg(c):
        res = minimize_scalar(neg, bracket=(a, b, c), method="golden", tol=rtol)
        if a <= res.x <= c:
            return float(res.x)
    res = minimize_scalar(neg, bounds=(a, c), method="bounded", options={"xatol": rtol * abs(b)})
    return float(res.x) if -res.fun >= -fb else b


def _edge(es: EigenSystem, t_in: float, direction: float, level: float, step: float, t_min: float, t_cap: float) -> float:
    """Walk from t_in until F drops below level, then bisect the crossing.

    The walk stops at t_min (left) or t_cap (right) if F never drops.
    """
    t = t_in
    chunk = 256
    while True:
        ts = t + direction * step * np.arange(1, chunk + 1)
        ts = ts[(ts >= t_min) & (ts <= t_cap)]
        if len(ts) == 0:
            return t_min if direction < 0 else t_cap
        below = np.flatnonzero(fidelity(es, ts) < level)
        if len(below):
            t_out = ts[below[0]]
            t_prev = ts[below[0] - 1] if below[0] else t
            g = lambda x: float(fidelity(es, x)) - level  # noqa: E731
            return brentq(g, min(t_prev, t_out), max(t_prev, t_out), xtol=1e-12 * max(1.0, abs(t_out)))
        t = ts[-1]


def window_width(es: EigenSystem, tau: float, drop: float = WINDOW_DROP, step: float | None = None) -> float:
    """Width of the contiguous interval around tau with F(t) >= F(tau) - drop."""
    level = float(fidelity(es, tau)) - drop
    if step is None:
        span = float(es.energies[-1] - es.energies[0])
        step = min(tau, math.pi / max(span, 1e-300)) / 8.0
    left = _edge(es, tau, -1.0, level, step, 0.0, tau)
    right = _edge(es, tau, 1.0, level, step, 0.0, 3.0 * tau)
    return right - left


def detect_transfer_time(
    es: EigenSystem,
    seed_tau: float,
    window: float = 0.5,
    resolution: int = 2000,
    drop: float = WINDOW_DROP,
    floor: float = FIDELITY_FLOOR,
    max_step: float | None = None,
) -> TransferTime:
    """Locate the transfer maximum near ``seed_tau``.

    Scans [(1-window) seed, (1+window) seed] on a uniform grid, takes the
    global max of |f|^2, refines it by golden section to 1e-8 relative and
    measures the readout window.  ``max_step`` forces a finer grid, needed
    when a fast oscillation rides on the transfer envelope.
    """
    if not seed_tau > 0:
        raise ValueError(f"seed_tau must be positive, got {seed_tau}")
    t0 = max((1.0 - window) * seed_tau, 0.0)
    t1 = (1.0 + window) * seed_tau
    npts = int(resolution)
    if max_step is not None:
        npts = max(npts, int(math.ceil((t1 - t0) / max_step)) + 1)
    ts = np.linspace(t0, t1, npts)
    a2 = np.abs(amplitude(es, ts)) ** 2
    i = int(np.argmax(a2))
    if fidelity_from_abs(math.sqrt(a2[i])) < floor:
        raise NoTransferError(f"no fidelity maximum above {floor} in [{t0:.6g}, {t1:.6g}]")
    dt = ts[1] - ts[0]
    lo, hi = ts[max(i - 1, 0)], ts[min(i + 1, npts - 1)]
    tau = _refine_max(es, lo, ts[i], hi, 1e-8) if hi > lo else float(ts[i])
    f_tau = float(abs(amplitude(es, tau)))
    width = window_width(es, tau, drop, step=dt)
    return TransferTime(tau, f_tau, width)


def first_useful_maximum(
    es: EigenSystem, t_max: float, resolution: int = 20000, drop: float = WINDOW_DROP, floor: float = FIDELITY_FLOOR
) -> TransferTime:
    """Fallback scan from t = 0: first local maximum within ``drop`` of the best one."""
    ts = np.linspace(0.0, t_max, int(resolution))
    a2 = np.abs(amplitude(es, ts)) ** 2
    f = fidelity_from_abs(np.sqrt(a2))
    if f.max() < floor:
        raise NoTransferError(f"no fidelity maximum above {floor} in [0, {t_max:.6g}]")
    peaks = np.flatnonzero((f[1:-1] >= f[:-2]) & (f[1:-1] >= f[2:])) + 1
    good = peaks[f[peaks] >= f.max() - drop] if len(peaks) else np.array([int(np.argmax(f))])
    i = int(good[0]) if len(good) else int(np.argmax(f))
    dt = ts[1] - ts[0]
    tau = _refine_max(es, ts[max(i - 1, 0)], ts[i], ts[min(i + 1, len(ts) - 1)], 1e-8)
    return TransferTime(tau, float(abs(amplitude(es, tau))), window_width(es, tau, drop, step=dt))


def search_step(spec: ChainSpec) -> float | None:
    """Grid step needed to resolve the even weak-coupling wiggle, else None."""
    if spec.family is Family.OST_WEAK and spec.n_sites % 2 == 0:
        omega, _ = oscillation_diagnostics(spec.n_sites, spec.alpha, spec.j_max)
        return math.pi / (10.0 * omega)
    return None


def measure_transfer_time(
    spec: ChainSpec, es: EigenSystem | None = None, window: float = 0.5, resolution: int = 2000
) -> TransferTime:
    """Transfer time of a clean chain, seeded by its closed-form estimate.

    PST chains use the exact time pi / (central gap) and only measure the
    window around it.
    """
    es = diagonalize(spec) if es is None else es
    if spec.family.is_pst:
        tau = pst_transfer_time(es)
        dt = tau / resolution
        return TransferTime(tau, float(abs(amplitude(es, tau))), window_width(es, tau, step=dt))
    return detect_transfer_time(
        es, transfer_time_estimate(spec), window=window, resolution=resolution, max_step=search_step(spec)
    )


def evolve(es: EigenSystem, times, tau: TransferTime | None = None) -> FidelityTrace:
    times = np.asarray(times, dtype=float)
    a2 = np.abs(amplitude(es, times)) ** 2
    f = fidelity_from_abs(np.sqrt(a2))
    if tau is None:
        return FidelityTrace(times, f, a2)
    return FidelityTrace(times, f, a2, tau.tau, tau.f_at_tau, tau.window_width)


def auto_time_grid(spec: ChainSpec, factor: float = 2.0, min_points: int = 2001) -> np.ndarray:
    """Uniform grid on [0, factor * estimate], fine enough for the even-N wiggle."""
    t_max = factor * transfer_time_estimate(spec)
    step = search_step(spec)
    npts = min_points if step is None else max(min_points, int(math.ceil(t_max / step)) + 1)
    return np.linspace(0.0, t_max, npts)
