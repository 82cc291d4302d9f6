"""Single-excitation eigenproblem of the XX chain.

In the one-excitation sector the Hamiltonian is the N x N symmetric
tridiagonal matrix with zero diagonal and off-diagonal J_i (hbar = 1).
The solver is an implicit-shift QL iteration that applies its Givens
rotations only to the eigenvector rows that are asked for, so the boundary
data needed for transfer amplitudes costs O(N^2) without forming the full
eigenvector matrix.

Mirror-symmetric chains (J_i == J_{N-i} exactly) are split into their
symmetric and antisymmetric sectors first.  Each sector is diagonalized on
its own, so a_{k,N} = +-a_{k,1} holds exactly even when the two sectors are
nearly degenerate and a joint solve would mix them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from spinwire.errors import EigenSolverError, InvalidChainError

MAX_SWEEPS = 60


@numba.njit(cache=True, nogil=True)
def _tql_rows(diag, off, rows):
    """Implicit QL with Wilkinson-like shifts.

    ``rows`` (r x n) holds selected rows of the identity on entry and the
    same rows of the eigenvector matrix on exit.  Returns (info, d) with
    info = 0 on success or the 1-based index of the non-converged eigenvalue.
    """
    n = diag.shape[0]
    d = diag.copy()
    e = np.zeros(n)
    e[: n - 1] = off
    r = rows.shape[0]
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) + dd == dd:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > MAX_SWEEPS:
                return l + 1, d
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            rr = math.sqrt(g * g + 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(rr, g))
            s = 1.0
            c = 1.0
            p = 0.0
            i = m - 1
            deflated = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                rr = math.sqrt(f * f + g * g)
                e[i + 1] = rr
                if rr == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    deflated = True
                    break
                s = f / rr
                c = g / rr
                g = d[i + 1] - p
                rr = (d[i] - g) * s + 2.0 * c * b
                p = s * rr
                d[i + 1] = g + p
                g = c * rr - b
                for k in range(r):
                    f = rows[k, i + 1]
                    rows[k, i + 1] = s * rows[k, i] + c * f
                    rows[k, i] = c * rows[k, i] - s * f
                i -= 1
            if deflated:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return 0, d


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Energies (ascending) and boundary eigenvector components.

    ``first[k]`` is a_{k,1} = <1|Psi_k>, ``last[k]`` is a_{k,N}.  ``vectors``
    (columns are eigenvectors) is only present when requested.
    """

    energies: np.ndarray
    first: np.ndarray
    last: np.ndarray
    vectors: np.ndarray | None = None

    @property
    def n(self) -> int:
        return len(self.energies)

    @property
    def occ_first(self) -> np.ndarray:
        """P_{k,1} = a_{k,1}^2."""
        return self.first * self.first

    @property
    def transfer_weights(self) -> np.ndarray:
        """a_{k,1} a_{k,N}, the residues of the 1 -> N propagator."""
        return self.first * self.last


def _as_couplings(couplings) -> np.ndarray:
    j = np.asarray(getattr(couplings, "couplings", couplings), dtype=float)
    if j.ndim != 1 or len(j) < 1:
        raise InvalidChainError("need at least one coupling (N >= 2)")
    if not np.all(np.isfinite(j)):
        raise InvalidChainError("couplings must be finite")
    return j


def _sector(diag, off, full):
    n = len(diag)
    rows = np.eye(n) if full else np.eye(1, n)
    info, d = _tql_rows(np.ascontiguousarray(diag), np.ascontiguousarray(off), rows)
    if info:
        raise EigenSolverError(f"QL iteration did not converge for eigenvalue {info}", index=info)
    return d, rows


def _mirror_system(j: np.ndarray, full: bool) -> EigenSystem:
    n = len(j) + 1
    m = n // 2
    inner = j[: m - 1]
    if n % 2 == 0:
        # sites 1..m with the central coupling folded onto the diagonal
        d_s = np.zeros(m)
        d_s[-1] = j[m - 1]
        es_, vs = _sector(d_s, inner, full)
        ea_, va = _sector(-d_s, inner, full)
    else:
        # symmetric sector keeps the central site, linked with sqrt(2) J_m
        es_, vs = _sector(np.zeros(m + 1), np.append(inner, math.sqrt(2.0) * j[m - 1]), full)
        ea_, va = _sector(np.zeros(m), inner, full)
    energies = np.concatenate([es_, ea_])
    parity = np.concatenate([np.ones(len(es_)), -np.ones(len(ea_))])
    head = np.concatenate([vs[0], va[0]])
    first = head / math.sqrt(2.0)
    vectors = None
    if full:
        vectors = np.zeros((n, n))
        k_s, k_a = len(es_), len(ea_)
        r = np.sqrt(0.5)
        vectors[:m, :k_s] = r * vs[:m]
        vectors[n - 1 : n - 1 - m : -1, :k_s] = r * vs[:m]
        if n % 2:
            vectors[m, :k_s] = vs[m]
        vectors[:m, k_s:] = r * va[:m]
        vectors[n - 1 : n - 1 - m : -1, k_s:] = -r * va[:m]
    order = np.argsort(energies, kind="stable")
    energies, parity, first = energies[order], parity[order], first[order]
    sign = np.sign(first)
    if vectors is not None:
        vectors = vectors[:, order]
        for k in np.flatnonzero(sign == 0):
            nz = np.flatnonzero(vectors[:, k])
            sign[k] = np.sign(vectors[nz[0], k]) if len(nz) else 1.0
        vectors *= sign
    sign[sign == 0] = 1.0
    first = first * sign
    return EigenSystem(energies, first, parity * first, vectors)


def diagonalize(couplings, full: bool = False) -> EigenSystem:
    """Diagonalize the chain with couplings J_1..J_{N-1} (a ChainSpec also works).

    Sign convention: a_{k,1} >= 0; when a_{k,1} is exactly zero the first
    nonzero tracked component is made positive (with ``full=False`` only the
    site-N row is tracked besides site 1).
    """
    j = np.ascontiguousarray(_as_couplings(couplings))
    n = len(j) + 1
    if np.array_equal(j, j[::-1]):
        return _mirror_system(j, full)
    if full:
        rows = np.eye(n)
    else:
        rows = np.zeros((2, n))
        rows[0, 0] = 1.0
        rows[1, n - 1] = 1.0
    info, d = _tql_rows(np.zeros(n), j, rows)
    if info:
        raise EigenSolverError(f"QL iteration did not converge for eigenvalue {info}", index=info)
    order = np.argsort(d, kind="stable")
    d = d[order]
    rows = rows[:, order]
    sign = np.sign(rows[0])
    zero = sign == 0
    if np.any(zero):
        for k in np.flatnonzero(zero):
            nz = np.flatnonzero(rows[:, k])
            sign[k] = np.sign(rows[nz[0], k]) if len(nz) else 1.0
    rows *= sign
    if full:
        return EigenSystem(d, rows[0].copy(), rows[n - 1].copy(), rows)
    return EigenSystem(d, rows[0].copy(), rows[1].copy())


def dominant_band(es: EigenSystem, mass: float = 0.95) -> np.ndarray:
    """Smallest window centred on the band centre holding P_{k,1} mass >= ``mass``.

    Returns 0-based indices into ``es.energies``.  Odd N grows 1, 3, 5, ...
    states around the middle one; even N grows 2, 4, 6, ...
    """
    if not 0 < mass <= 1:
        raise ValueError(f"mass must lie in (0, 1], got {mass}")
    p = es.occ_first
    n = len(p)
    lo = (n - 1) // 2
    hi = n // 2
    # completeness holds only to rounding; the full band always qualifies
    while math.fsum(p[lo : hi + 1]) < mass - 1e-12 and (lo > 0 or hi < n - 1):
        lo = max(lo - 1, 0)
        hi = min(hi + 1, n - 1)
    return np.arange(lo, hi + 1)


def ost_secular_residual(energies, alpha: float, j: float = 1.0) -> np.ndarray:
    """Residual of the boundary-controlled secular relation at each eigenvalue.

    With E = 2 J cos(gamma), the N eigenvalues of the OST chain satisfy
    +cot(gamma) cot((N-1) gamma / 2) = a (mirror-even states) or
    -cot(gamma) tan((N-1) gamma / 2) = a (mirror-odd states), with
    a = alpha^2 / (2 - alpha^2).  Each energy is scored against the better
    of the two branches, in sine-weighted form so the residual stays finite.
    Diagnostic only; energies come from ``diagonalize``.
    """
    e = np.asarray(energies, dtype=float)
    n = len(e)
    a = alpha**2 / (2.0 - alpha**2)
    gamma = np.arccos(np.clip(e / (2.0 * j), -1.0, 1.0))
    half = 0.5 * (n - 1) * gamma
    sg, cg = np.sin(gamma), np.cos(gamma)
    sh, ch = np.sin(half), np.cos(half)
    even = cg * ch - a * sg * sh
    odd = -cg * sh - a * sg * ch
    return np.minimum(np.abs(even), np.abs(odd))
