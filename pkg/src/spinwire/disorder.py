"""Static coupling disorder and seeded Monte Carlo ensembles.

Every realization draws its offsets from its own counter-based Philox stream
keyed by (master seed, realization index); offset delta_i sits at position
i - 1 of that stream.  Realizations therefore never share state, any subset
can be recomputed in isolation, and the ensemble mean (an exactly rounded
``math.fsum``) does not depend on scheduling or thread count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from spinwire.chains import ChainSpec
from spinwire.dynamics import amplitude, fidelity_from_abs
from spinwire.errors import EigenSolverError, EnsembleDegradedError, InvalidChainError
from spinwire.spectral import diagonalize

DEFAULT_NAV = 1000
MAX_FAILURE_FRACTION = 0.01


class DisorderKind(str, Enum):
    RELATIVE = "relative"
    ABSOLUTE = "absolute"

    @classmethod
    def parse(cls, value) -> "DisorderKind":
        aliases = {"rel": cls.RELATIVE, "abs": cls.ABSOLUTE}
        return aliases.get(value) or cls(value)


@dataclass(frozen=True)
class DisorderModel:
    """Uniform offsets delta_i in [-strength, strength].

    Relative: dJ_i = J_i delta_i.  Absolute: dJ_i = J_max delta_i.
    ``perturbed_range`` is an inclusive 1-based coupling interval; None means
    the default 2..N-2 that leaves both boundary couplings clean.
    """

    kind: DisorderKind = DisorderKind.RELATIVE
    strength: float = 0.0
    seed: int = 0
    perturbed_range: tuple[int, int] | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", DisorderKind.parse(self.kind))
        if not self.strength >= 0:
            raise InvalidChainError(f"disorder strength must be >= 0, got {self.strength}")
        if int(self.seed) != self.seed or self.seed < 0 or self.seed >= 2**64:
            raise InvalidChainError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    def index_range(self, n_sites: int) -> tuple[int, int]:
        lo, hi = self.perturbed_range if self.perturbed_range is not None else (2, n_sites - 2)
        if self.perturbed_range is not None and not (1 <= lo and hi <= n_sites - 1):
            raise InvalidChainError(f"perturbed range {self.perturbed_range} outside 1..{n_sites - 1}")
        return lo, hi


@dataclass(frozen=True, eq=False)
class EnsembleResult:
    mean: float
    std_error: float
    n_realizations: int
    failures: int = 0
    samples: np.ndarray | None = field(default=None, repr=False)


def realization_stream(seed: int, realization: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(realization)])))


def offsets(model: DisorderModel, n_couplings: int, realization: int) -> np.ndarray:
    """delta_1..delta_{N-1} for one realization (all drawn, range applied later)."""
    return realization_stream(model.seed, realization).uniform(-model.strength, model.strength, n_couplings)


def perturb(spec: ChainSpec, model: DisorderModel, realization: int) -> np.ndarray:
    """Disordered coupling vector of realization ``realization``.

    Couplings outside the perturbed range are returned untouched; perturbed
    couplings may turn negative when strength exceeds J_i / J_max, and are
    kept as they are.
    """
    j = np.array(spec.couplings, dtype=float)
    lo, hi = model.index_range(spec.n_sites)
    if model.strength == 0 or hi < lo:
        return j
    delta = offsets(model, len(j), realization)[lo - 1 : hi]
    scale = j[lo - 1 : hi] if model.kind is DisorderKind.RELATIVE else spec.j_max
    j[lo - 1 : hi] = j[lo - 1 : hi] + scale * delta
    return j


def realization_fidelity(spec: ChainSpec, model: DisorderModel, tau: float, realization: int) -> float:
    es = diagonalize(perturb(spec, model, realization))
    return float(fidelity_from_abs(abs(amplitude(es, tau))))


def default_threads() -> int:
    env = os.environ.get("SPINWIRE_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _run_block(spec, model, tau, start, stop, out, failed):
    for r in range(start, stop):
        try:
            out[r] = realization_fidelity(spec, model, tau, r)
        except EigenSolverError:
            failed[r] = True


def averaged_fidelity(
    spec: ChainSpec,
    model: DisorderModel,
    tau: float,
    n_av: int = DEFAULT_NAV,
    threads: int = 1,
    keep_samples: bool = False,
) -> EnsembleResult:
    """Mean and standard error of F(tau) over ``n_av`` realizations.

    ``tau`` is the clean chain's transfer time and is not re-optimized per
    realization.  Failed diagonalizations are dropped and counted; more than
    1% of them raises EnsembleDegradedError.
    """
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    if n_av < 1:
        raise ValueError(f"n_av must be >= 1, got {n_av}")
    out = np.full(n_av, np.nan)
    failed = np.zeros(n_av, dtype=bool)
    threads = max(1, min(int(threads), n_av))
    if threads == 1:
        _run_block(spec, model, tau, 0, n_av, out, failed)
    else:
        bounds = np.linspace(0, n_av, threads + 1).astype(int)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            jobs = [
                pool.submit(_run_block, spec, model, tau, int(a), int(b), out, failed)
                for a, b in zip(bounds[:-1], bounds[1:])
            ]
            for job in jobs:
                job.result()
    n_fail = int(failed.sum())
    if n_fail > MAX_FAILURE_FRACTION * n_av:
        raise EnsembleDegradedError(f"{n_fail} of {n_av} realizations failed", n_fail, n_av)
    good = out[~failed]
    m = len(good)
    mean = math.fsum(good) / m
    if m > 1:
        var = math.fsum((good - mean) ** 2) / (m - 1)
        se = math.sqrt(var / m)
    else:
        se = 0.0
    return EnsembleResult(mean, se, m, n_fail, out.copy() if keep_samples else None)
