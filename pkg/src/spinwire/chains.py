"""Coupling profiles for the homogeneous, boundary-controlled (OST) and PST chains.

Sites are labelled 1..N and couplings 1..N-1 in every external format; the
arrays stored here are plain 0-based numpy vectors, so ``couplings[i - 1]``
is J_i.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from spinwire.errors import InvalidChainError
from spinwire.synthesis import pst_spectrum, reconstruct_jacobi


class Family(str, Enum):
    HOMOGENEOUS = "homogeneous"
    OST_WEAK = "ost-weak"
    OST_OPTIMAL = "ost-optimal"
    PST_LINEAR = "pst-linear"
    PST_QUADRATIC = "pst-quadratic"

    @property
    def is_ost(self) -> bool:
        return self in (Family.OST_WEAK, Family.OST_OPTIMAL)

    @property
    def is_pst(self) -> bool:
        return self in (Family.PST_LINEAR, Family.PST_QUADRATIC)


@dataclass(frozen=True, eq=False)
class ChainSpec:
    """An XX chain: its family, parameters and coupling vector J_1..J_{N-1}."""

    family: Family
    couplings: np.ndarray
    alpha: float | None = None
    j_bulk: float = 1.0
    exponent: int | None = field(default=None)

    def __post_init__(self):
        j = np.array(self.couplings, dtype=float)
        if j.ndim != 1 or len(j) < 1:
            raise InvalidChainError("a chain needs at least one coupling (N >= 2)")
        j.setflags(write=False)
        object.__setattr__(self, "couplings", j)
        object.__setattr__(self, "family", Family(self.family))

    def __eq__(self, other):
        if not isinstance(other, ChainSpec):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    @property
    def n_sites(self) -> int:
        return len(self.couplings) + 1

    @property
    def j_max(self) -> float:
        return float(self.couplings.max())

    def with_couplings(self, couplings) -> "ChainSpec":
        return ChainSpec(self.family, couplings, self.alpha, self.j_bulk, self.exponent)

    def to_dict(self) -> dict:
        d = {
            "family": self.family.value,
            "n_sites": self.n_sites,
            "couplings": [float(x) for x in self.couplings],
            "j_bulk": self.j_bulk,
        }
        if self.alpha is not None:
            d["alpha"] = self.alpha
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "ChainSpec":
        try:
            family = Family(d["family"])
            couplings = d["couplings"]
            n_sites = int(d["n_sites"])
        except (KeyError, ValueError, TypeError) as exc:
            raise InvalidChainError(f"malformed chain document: {exc}") from exc
        if n_sites != len(couplings) + 1:
            raise InvalidChainError(f"n_sites={n_sites} does not match {len(couplings)} couplings")
        exponent = {Family.PST_LINEAR: 1, Family.PST_QUADRATIC: 2}.get(family)
        return cls(family, couplings, d.get("alpha"), float(d.get("j_bulk", 1.0)), exponent)

    @classmethod
    def from_json(cls, text: str) -> "ChainSpec":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise InvalidChainError(f"chain document is not valid JSON: {exc}") from exc


def _check_length(n: int, minimum: int = 2) -> None:
    if int(n) != n or n < minimum:
        raise InvalidChainError(f"chain length must be an integer >= {minimum}, got {n}")


def mirror(couplings) -> np.ndarray:
    """Copy the first half onto the second so J_i == J_{N-i} bit for bit."""
    j = np.array(couplings, dtype=float)
    half = len(j) // 2
    if half:
        j[len(j) - half :] = j[:half][::-1]
    return j


def build_homogeneous(n: int, j: float = 1.0) -> ChainSpec:
    _check_length(n)
    if not j > 0:
        raise InvalidChainError(f"coupling must be positive, got {j}")
    return ChainSpec(Family.HOMOGENEOUS, np.full(n - 1, float(j)), j_bulk=float(j))


def alpha_opt(n: int) -> float:
    """Speed-optimal boundary coupling 1.05 * n^(-1/6); exceeds 1 only for n < 2."""
    return 1.05 * n ** (-1.0 / 6.0)


def build_ost(n: int, alpha: float, j: float = 1.0, family: Family = Family.OST_WEAK) -> ChainSpec:
    """Bulk couplings j, boundary couplings J_1 = J_{N-1} = alpha * j."""
    _check_length(n, 3)
    if not alpha > 0:
        raise InvalidChainError(f"alpha must be positive, got {alpha}")
    if not j > 0:
        raise InvalidChainError(f"bulk coupling must be positive, got {j}")
    couplings = np.full(n - 1, float(j))
    couplings[0] = couplings[-1] = alpha * j
    return ChainSpec(family, couplings, alpha=float(alpha), j_bulk=float(j))


def build_ost_optimal(n: int, j: float = 1.0) -> ChainSpec:
    return build_ost(n, alpha_opt(n), j, family=Family.OST_OPTIMAL)


def build_pst_linear(n: int) -> ChainSpec:
    """J_i proportional to sqrt(i (N - i)), normalized to max J_i = 1.

    This is the 1-based form of sqrt((l+1)(N'-l)) for a chain of N'+1 sites
    labelled l = 0..N'.
    """
    _check_length(n)
    i = np.arange(1, n, dtype=float)
    raw = np.sqrt(i * (n - i))
    return ChainSpec(Family.PST_LINEAR, mirror(raw / raw.max()), exponent=1)


def build_pst_quadratic(n: int, tol: float = 1e-10) -> ChainSpec:
    """Quadratic-spectrum PST chain from the inverse eigenvalue problem, max J_i = 1."""
    _check_length(n)
    raw = reconstruct_jacobi(pst_spectrum(n, 2), tol=tol)
    return ChainSpec(Family.PST_QUADRATIC, mirror(raw / raw.max()), exponent=2)


def build_chain(family, n: int, alpha: float | None = None, j: float = 1.0) -> ChainSpec:
    """Dispatch on a family name such as ``"pst-linear"``."""
    family = Family(family)
    if family is Family.HOMOGENEOUS:
        return build_homogeneous(n, j)
    if family is Family.OST_WEAK:
        if alpha is None:
            raise InvalidChainError("ost-weak needs alpha")
        return build_ost(n, alpha, j)
    if family is Family.OST_OPTIMAL:
        return build_ost_optimal(n, j)
    if family is Family.PST_LINEAR:
        return build_pst_linear(n)
    return build_pst_quadratic(n)


def coupling_ratio(spec: ChainSpec) -> float:
    j = np.abs(spec.couplings)
    return float(j.max() / j.min())


def is_mirror_symmetric(couplings) -> bool:
    j = np.asarray(couplings)
    return bool(np.array_equal(j, j[::-1]))

