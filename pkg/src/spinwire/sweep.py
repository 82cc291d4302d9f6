"""(N, eps) sweeps of the disorder-averaged fidelity, iso-fidelity contours,
scaling-law fits F = (1 + exp(-c N eps^beta)) / 2 and crossing lines.
"""

from __future__ import annotations

import json
import math
import os
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from spinwire.chains import Family, build_chain
from spinwire.disorder import DEFAULT_NAV, DisorderKind, DisorderModel, averaged_fidelity
from spinwire.dynamics import measure_transfer_time
from spinwire.errors import ContourAmbiguousWarning, FitError, SpinwireError

FIDELITY_LEVELS = (0.99, 0.95, 0.9, 0.8, 0.7)
MIN_R2 = 0.98


def log_grid(lo: float, hi: float, per_decade: int = 12) -> np.ndarray:
    """Log-spaced grid from lo to hi inclusive with at least ``per_decade`` points per decade."""
    if not 0 < lo < hi:
        raise ValueError(f"need 0 < lo < hi, got {lo}, {hi}")
    npts = int(math.ceil(per_decade * math.log10(hi / lo))) + 1
    return np.geomspace(lo, hi, npts)


@dataclass(frozen=True)
class SweepConfig:
    family: str
    n_values: tuple
    eps_values: tuple
    kind: str = "relative"
    alpha: float | None = None
    n_av: int = DEFAULT_NAV
    seed: int = 0
    perturbed_range: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family).value)
        object.__setattr__(self, "kind", DisorderKind.parse(self.kind).value)
        object.__setattr__(self, "n_values", tuple(sorted(int(n) for n in self.n_values)))
        object.__setattr__(self, "eps_values", tuple(sorted(float(e) for e in self.eps_values)))
        if self.perturbed_range is not None:
            object.__setattr__(self, "perturbed_range", tuple(int(i) for i in self.perturbed_range))
        if not self.n_values or not self.eps_values:
            raise ValueError("sweep needs at least one N and one eps")
        if min(self.eps_values) <= 0:
            raise ValueError("eps values must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["n_values"] = list(self.n_values)
        d["eps_values"] = list(self.eps_values)
        if self.perturbed_range is not None:
            d["perturbed_range"] = list(self.perturbed_range)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        return cls(**d)

    def cell_key(self, n: int, eps: float) -> tuple:
        return (self.family, self.kind, self.alpha, self.seed, self.n_av, n, repr(float(eps)))


@dataclass(eq=False)
class SweepGrid:
    """F-bar(N, eps) with standard errors; rows are chain lengths."""

    n_values: np.ndarray
    eps_values: np.ndarray
    mean: np.ndarray
    se: np.ndarray
    n_av: int
    failed: np.ndarray = None
    taus: np.ndarray = None
    label: str = ""

    def __post_init__(self):
        self.n_values = np.asarray(self.n_values, dtype=int)
        self.eps_values = np.asarray(self.eps_values, dtype=float)
        self.mean = np.asarray(self.mean, dtype=float)
        self.se = np.asarray(self.se, dtype=float)
        if self.failed is None:
            self.failed = ~np.isfinite(self.mean)
        if self.taus is None:
            self.taus = np.full(len(self.n_values), np.nan)

    def select(self, parity: str | None = None) -> "SweepGrid":
        """Sub-grid with only even or only odd chain lengths."""
        if parity is None:
            return self
        keep = (self.n_values % 2 == 0) if parity == "even" else (self.n_values % 2 == 1)
        return SweepGrid(
            self.n_values[keep], self.eps_values, self.mean[keep], self.se[keep], self.n_av,
            self.failed[keep], self.taus[keep], f"{self.label}[{parity}]",
        )

    def rows(self):
        for i, n in enumerate(self.n_values):
            for j, eps in enumerate(self.eps_values):
                yield int(n), float(eps), float(self.mean[i, j]), float(self.se[i, j]), self.n_av

    @classmethod
    def from_rows(cls, rows, label: str = "") -> "SweepGrid":
        rows = list(rows)
        ns = sorted({int(r[0]) for r in rows})
        es = sorted({float(r[1]) for r in rows})
        mean = np.full((len(ns), len(es)), np.nan)
        se = np.full_like(mean, np.nan)
        nav = 0
        for n, eps, m, s, k in rows:
            i, j = ns.index(int(n)), es.index(float(eps))
            mean[i, j], se[i, j] = float(m), float(s)
            nav = max(nav, int(k))
        return cls(ns, es, mean, se, nav, label=label)


class Checkpoint:
    """Append-only JSON-lines record of finished sweep cells.

    A torn final line (process killed mid-write) is ignored on reload.
    """

    def __init__(self, path):
        self.path = Path(path)
        self.cells: dict[tuple, dict] = {}
        if self.path.exists():
            for line in self.path.read_text().splitlines():
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError:
                    continue
                self.cells[self._key(rec)] = rec

    @staticmethod
    def _key(rec: dict) -> tuple:
        return (rec["family"], rec["kind"], rec["alpha"], rec["seed"], rec["nav"], rec["n"], repr(float(rec["eps"])))

    def get(self, key):
        return self.cells.get(key)

    def append(self, rec: dict) -> None:
        self.cells[self._key(rec)] = rec
        with open(self.path, "a", newline="\n") as fh:
            fh.write(json.dumps(rec) + "\n")
            fh.flush()
            os.fsync(fh.fileno())


def run_sweep(config: SweepConfig, checkpoint=None, threads: int = 1, progress=None) -> SweepGrid:
    """Averaged fidelity on every (N, eps) cell of ``config``.

    Each N uses the clean chain's transfer time.  With a checkpoint path,
    finished cells are appended as they complete and skipped on rerun, so
    an interrupted sweep resumes to the same grid bit for bit.  Cell
    failures are recorded as NaN rather than raised.
    """
    ckpt = Checkpoint(checkpoint) if checkpoint is not None else None
    ns, es = config.n_values, config.eps_values
    mean = np.full((len(ns), len(es)), np.nan)
    se = np.full_like(mean, np.nan)
    taus = np.full(len(ns), np.nan)
    errors: dict[tuple, str] = {}
    for i, n in enumerate(ns):
        spec = None
        for j, eps in enumerate(es):
            key = config.cell_key(n, eps)
            rec = ckpt.get(key) if ckpt else None
            if rec is None:
                if spec is None:
                    spec = build_chain(config.family, n, alpha=config.alpha)
                    taus[i] = measure_transfer_time(spec).tau
                model = DisorderModel(config.kind, eps, config.seed, config.perturbed_range)
                rec = {
                    "family": config.family, "kind": config.kind, "alpha": config.alpha,
                    "seed": config.seed, "nav": config.n_av, "n": n, "eps": eps,
                    "tau": float(taus[i]), "mean": None, "se": None, "failures": 0, "error": None,
                }
                try:
                    res = averaged_fidelity(spec, model, taus[i], config.n_av, threads=threads)
                    rec.update(mean=res.mean, se=res.std_error, failures=res.failures)
                except SpinwireError as exc:
                    rec["error"] = f"{type(exc).__name__}: {exc}"
                if ckpt:
                    ckpt.append(rec)
            taus[i] = rec["tau"]
            if rec["mean"] is not None:
                mean[i, j], se[i, j] = rec["mean"], rec["se"]
            else:
                errors[(n, eps)] = rec["error"]
            if progress:
                progress(n, eps, rec)
    label = f"{config.family}/{config.kind}"
    grid = SweepGrid(ns, es, mean, se, config.n_av, ~np.isfinite(mean), taus, label)
    grid.errors = errors
    return grid


def scaling_law(n, eps, c: float, beta: float):
    """F-bar = (1 + exp(-c N eps^beta)) / 2."""
    return 0.5 * (1.0 + np.exp(-c * np.asarray(n, dtype=float) * np.asarray(eps, dtype=float) ** beta))


def synthetic_grid(n_values, eps_values, c: float, beta: float, se: float = 0.0) -> SweepGrid:
    """Noise-free grid generated by the scaling law (for round-trip checks)."""
    n = np.asarray(n_values)[:, None]
    e = np.asarray(eps_values)[None, :]
    mean = scaling_law(n, e, c, beta)
    return SweepGrid(n_values, eps_values, mean, np.full(mean.shape, se), 0, label=f"synthetic c={c} beta={beta}")


def level_scaling_constant(level: float) -> float:
    """-ln(2 F - 1): the value of c N eps^beta on the F = level contour."""
    return -math.log(2.0 * level - 1.0)


def _interp_log(e0, e1, f0, f1, level):
    x0, x1 = math.log(e0), math.log(e1)
    return math.exp(x0 + (level - f0) / (f1 - f0) * (x1 - x0))


def extract_contour(grid: SweepGrid, level: float) -> list[tuple[int, float]]:
    """(N, eps) points where F-bar first drops through ``level``.

    Linear interpolation in (log eps, F-bar).  Rows that never cross are
    omitted; rows that rise with eps by more than 3 combined standard errors
    trigger a ContourAmbiguousWarning.
    """
    if not 0.5 < level < 1:
        raise ValueError(f"level must lie in (1/2, 1), got {level}")
    if len(grid.eps_values) < 2:
        raise ValueError("need at least two eps values per N")
    points = []
    for i, n in enumerate(grid.n_values):
        ok = np.isfinite(grid.mean[i])
        f, s, e = grid.mean[i][ok], grid.se[i][ok], grid.eps_values[ok]
        if len(f) < 2:
            continue
        rise = f[None, :] - f[:, None]
        tol = 3.0 * np.sqrt(s[None, :] ** 2 + s[:, None] ** 2)
        upper = np.triu(np.ones_like(rise, dtype=bool), 1)
        if np.any((rise > tol) & upper):
            warnings.warn(
                ContourAmbiguousWarning(f"F-bar not monotone in eps for N={n}", n=int(n), column=f.copy()),
                stacklevel=2,
            )
        for j in range(len(f) - 1):
            if f[j] >= level > f[j + 1]:
                points.append((int(n), _interp_log(e[j], e[j + 1], f[j], f[j + 1], level)))
                break
    return points


@dataclass
class LevelFit:
    level: float
    beta: float
    c: float
    r2: float
    n_points: int
    included: bool
    c_spread: float = 0.0


@dataclass
class ScalingFit:
    c: float
    beta: float
    levels: list = field(default_factory=list)

    @property
    def used_levels(self) -> list[float]:
        return [lf.level for lf in self.levels if lf.included]

    def to_dict(self) -> dict:
        return {"c": self.c, "beta": self.beta, "levels": [asdict(lf) for lf in self.levels]}


def fit_contour(level: float, points, min_r2: float = MIN_R2) -> LevelFit:
    """Straight-line fit log N = const - beta log eps along one contour."""
    pts = np.asarray(points, dtype=float)
    if len(pts) < 2:
        return LevelFit(level, math.nan, math.nan, math.nan, len(pts), False)
    log_n, log_e = np.log(pts[:, 0]), np.log(pts[:, 1])
    if np.ptp(log_e) == 0:
        return LevelFit(level, math.nan, math.nan, math.nan, len(pts), False)
    reg = stats.linregress(log_e, log_n)
    beta = -reg.slope
    r2 = reg.rvalue**2 if len(pts) > 2 else 1.0
    cs = level_scaling_constant(level) / (pts[:, 0] * pts[:, 1] ** beta)
    ok = bool(beta > 0 and r2 >= min_r2)
    return LevelFit(level, float(beta), float(np.mean(cs)), float(r2), len(pts), ok, float(np.std(cs)))


def fit_scaling(contours: dict, min_r2: float = MIN_R2) -> ScalingFit:
    """Per-level (c, beta) from straight contours, then averaged over levels.

    ``contours`` maps a fidelity level to its (N, eps) points.  Levels whose
    contour is not straight (R^2 < min_r2) or has < 2 points are excluded.
    """
    fits = [fit_contour(level, pts, min_r2) for level, pts in sorted(contours.items(), reverse=True)]
    used = [lf for lf in fits if lf.included]
    if not used:
        raise FitError("no contour passed the straightness test")
    return ScalingFit(float(np.mean([lf.c for lf in used])), float(np.mean([lf.beta for lf in used])), fits)


def contours_for(grid: SweepGrid, levels=FIDELITY_LEVELS) -> dict:
    return {lv: extract_contour(grid, lv) for lv in levels}


@dataclass
class CrossingPoint:
    n: int
    eps: float
    fidelity: float


@dataclass
class CrossingResult:
    points: list
    a: float = math.nan
    b: float = math.nan
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "degenerate": self.degenerate, "points": [asdict(p) for p in self.points]}


def find_crossing(grid_a: SweepGrid, grid_b: SweepGrid, significance: float = 2.0) -> CrossingResult:
    """Where F-bar_A - F-bar_B changes sign, with a power-law fit N eps^b = a.

    A sign change counts only when the difference exceeds ``significance``
    combined standard errors on both flanks.  The zero is interpolated in
    log eps between the bracketing grid points.
    """
    if not (np.array_equal(grid_a.n_values, grid_b.n_values) and np.allclose(grid_a.eps_values, grid_b.eps_values)):
        raise ValueError("grids must share N and eps axes")
    diff = grid_a.mean - grid_b.mean
    thr = significance * np.sqrt(grid_a.se**2 + grid_b.se**2)
    sig = np.where(diff > thr, 1, np.where(diff < -thr, -1, 0))
    sig[~np.isfinite(diff)] = 0
    points = []
    for i, n in enumerate(grid_a.n_values):
        idx = np.flatnonzero(sig[i])
        for p, q in zip(idx[:-1], idx[1:]):
            if sig[i, p] != sig[i, q]:
                d = diff[i]
                for k in range(p, q):
                    if d[k] * d[k + 1] <= 0 and d[k] != d[k + 1]:
                        e0, e1 = grid_a.eps_values[k], grid_a.eps_values[k + 1]
                        eps = _interp_log(e0, e1, d[k], d[k + 1], 0.0)
                        w = (math.log(eps) - math.log(e0)) / (math.log(e1) - math.log(e0))
                        fa = (1 - w) * grid_a.mean[i, k] + w * grid_a.mean[i, k + 1]
                        fb = (1 - w) * grid_b.mean[i, k] + w * grid_b.mean[i, k + 1]
                        points.append(CrossingPoint(int(n), float(eps), float(0.5 * (fa + fb))))
                        break
                break
    degenerate = not np.any(sig)
    result = CrossingResult(points, degenerate=degenerate)
    if len(points) >= 2:
        log_n = np.log([p.n for p in points])
        log_e = np.log([p.eps for p in points])
        if np.ptp(log_e) > 0:
            reg = stats.linregress(log_e, log_n)
            result.b = float(-reg.slope)
            # a crossing line at fixed eps has no finite power law
            with np.errstate(over="ignore"):
                result.a = float(np.exp(reg.intercept))
    return result


def regime_boundary_eps(n) -> np.ndarray:
    """eps^0 = (1.65 / N)^0.66: where the optimal-boundary chain leaves its low-disorder regime."""
    return (1.65 / np.asarray(n, dtype=float)) ** 0.66


def boundary_fidelity_gap(n) -> np.ndarray:
    """(3 log10 N - 2) / 100: linear-PST minus optimal-OST F-bar at eps^0."""
    return (3.0 * np.log10(np.asarray(n, dtype=float)) - 2.0) / 100.0


def interpolate_row(grid: SweepGrid, n: int, eps: float) -> float:
    """F-bar at (n, eps) by linear interpolation in log eps along row n."""
    i = int(np.flatnonzero(grid.n_values == n)[0])
    return float(np.interp(math.log(eps), np.log(grid.eps_values), grid.mean[i]))
