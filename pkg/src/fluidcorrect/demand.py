"""Finite-support demand: scenario sets, equal-weight expansion, empirical
mixture quantiles, CSV I/O and synthetic weekly Poisson demand."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce

import numpy as np

from ._validation import check_demand_paths

log = logging.getLogger(__name__)

HOURS = 24
DAYS = 7
WEEK = DAYS * HOURS


class DemandDataError(ValueError):
    pass


class DemandScenarioSet:
    """``Z`` weighted demand paths, each ``T x n``.

    ``paths`` has shape ``(Z, T, n)``. Weights default to ``1/Z``.
    """

    def __init__(self, paths, weights=None, ids=None):
        paths = check_demand_paths(paths)
        Z = paths.shape[0]
        if weights is None:
            weights = np.full(Z, 1.0 / Z)
        weights = np.asarray(weights, dtype=float).ravel()
        if weights.size != Z:
            raise DemandDataError(f"{weights.size} weights for {Z} scenarios")
        if np.any(~np.isfinite(weights)) or np.any(weights <= 0):
            raise DemandDataError("weights must be strictly positive")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise DemandDataError(f"weights sum to {weights.sum()!r}, not 1")
        paths.setflags(write=False)
        weights.setflags(write=False)
        self.paths = paths
        self.weights = weights
        self.ids = list(ids) if ids is not None else [str(z) for z in range(Z)]

    @property
    def Z(self):
        return self.paths.shape[0]

    @property
    def T(self):
        return self.paths.shape[1]

    @property
    def n(self):
        return self.paths.shape[2]

    @classmethod
    def single(cls, path):
        """One deterministic path of shape ``(T, n)``."""
        return cls(np.asarray(path, dtype=float)[None])

    def mean_path(self):
        return np.tensordot(self.weights, self.paths, axes=1)

    def restrict(self, classes=None, periods=None):
        paths = self.paths
        if periods is not None:
            paths = paths[:, periods, :]
        if classes is not None:
            paths = paths[:, :, list(classes)]
        return DemandScenarioSet(np.array(paths), self.weights, self.ids)

    def __repr__(self):
        return f"DemandScenarioSet(Z={self.Z}, T={self.T}, n={self.n})"


@dataclass(frozen=True)
class ExpandedDemandSequence:
    """Equal-weight deterministic sequence built by duplicating scenarios.

    ``demands`` has shape ``(T * Z_tilde, n)``; ``counts[z]`` is how many
    times scenario ``z`` was duplicated and ``scale = Z_tilde * T``.
    """

    demands: np.ndarray
    counts: np.ndarray
    Z_tilde: int
    T: int

    @property
    def taus(self):
        return self.demands.shape[0]

    @property
    def scale(self):
        return self.Z_tilde * self.T


def rational_weights(weights, max_denominator=10**6, atol=1e-12):
    """Integer duplication counts ``N_z`` with ``N_z / sum(N) == weights``."""
    fracs = []
    for w in weights:
        f = Fraction(float(w)).limit_denominator(max_denominator)
        if abs(float(f) - w) > atol:
            raise DemandDataError(
                f"weight {w!r} is not a fraction with denominator <= {max_denominator}; "
                "resample to equal weights with resample_equal_weights()"
            )
        fracs.append(f)
    if sum(fracs) != 1:
        raise DemandDataError("rationalised weights do not sum to 1; resample to equal weights")
    lcm = reduce(lambda a, b: a * b // math.gcd(a, b), (f.denominator for f in fracs), 1)
    counts = np.array([int(f * lcm) for f in fracs], dtype=np.int64)
    g = reduce(math.gcd, counts.tolist())
    return counts // g


def expand(ds, max_denominator=10**6):
    """Duplicate scenarios in proportion to their weights and concatenate periods.

    Raises :class:`DemandDataError` when a weight cannot be written with
    denominator at most ``max_denominator``.
    """
    counts = rational_weights(ds.weights, max_denominator)
    Zt = int(counts.sum())
    if Zt * ds.T > 50_000_000 // max(ds.n, 1):
        raise DemandDataError(f"expansion needs {Zt} duplicated paths; resample to equal weights")
    reps = np.repeat(np.arange(ds.Z), counts)
    demands = ds.paths[reps].reshape(Zt * ds.T, ds.n)
    return ExpandedDemandSequence(demands, counts, Zt, ds.T)


def resample_equal_weights(ds, n_scenarios=None, seed=None):
    """Bootstrap ``n_scenarios`` (default ``10 * Z``) equal-weight paths from ``ds``."""
    n_scenarios = 10 * ds.Z if n_scenarios is None else int(n_scenarios)
    rng = np.random.default_rng(seed)
    idx = rng.choice(ds.Z, size=n_scenarios, p=ds.weights)
    log.info("approximating %d weighted scenarios by %d equal-weight draws", ds.Z, n_scenarios)
    return DemandScenarioSet(ds.paths[idx])


class EmpiricalMixtureCDF:
    """Pooled empirical distribution of one class over all periods and scenarios."""

    def __init__(self, samples):
        s = np.sort(np.asarray(samples, dtype=float).ravel())
        if s.size == 0:
            raise DemandDataError("empirical CDF needs at least one sample")
        self.samples = s

    @classmethod
    def from_scenarios(cls, ds, i):
        """Pool class ``i`` across periods and scenarios.

        Non-uniform weights are honoured through :func:`rational_weights`
        duplication counts.
        """
        if ds.Z * ds.T < 1:
            raise DemandDataError("empty sample set")
        if np.allclose(ds.weights, ds.weights[0], rtol=0, atol=1e-15):
            return cls(ds.paths[:, :, i])
        counts = rational_weights(ds.weights)
        return cls(np.repeat(ds.paths[:, :, i], counts, axis=0))

    @property
    def size(self):
        return self.samples.size

    def cdf(self, x):
        return np.searchsorted(self.samples, x, side="right") / self.size

    def quantile(self, q):
        """Lower empirical quantile: the ``ceil(q * M)``-th order statistic."""
        q = np.asarray(q, dtype=float)
        if np.any((q < 0) | (q > 1)):
            raise ValueError("quantile level must lie in [0, 1]")
        rank = np.ceil(q * self.size - 1e-12).astype(int)
        rank = np.clip(rank, 1, self.size)
        out = self.samples[rank - 1]
        return float(out) if out.ndim == 0 else out


def empirical_mixture_cdf(ds, i):
    return EmpiricalMixtureCDF.from_scenarios(ds, i)


CSV_HEADER = ["scenario", "period", "class", "count"]


def load_csv(path):
    """Read a demand file with header ``scenario,period,class,count``.

    Every scenario must supply each ``(period, class)`` cell exactly once;
    scenarios are weighted equally.
    """
    cells = {}
    order = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != CSV_HEADER:
            raise DemandDataError(f"line 1: expected header {','.join(CSV_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not f.strip() for f in row):
                continue
            if len(row) != 4:
                raise DemandDataError(f"malformed row at line {lineno}: expected 4 fields")
            sid = row[0].strip()
            try:
                t, i, v = int(row[1]), int(row[2]), float(row[3])
            except ValueError:
                raise DemandDataError(f"malformed row at line {lineno}: {row!r}") from None
            if t < 0 or i < 0:
                raise DemandDataError(f"malformed row at line {lineno}: negative index")
            if not math.isfinite(v):
                raise DemandDataError(f"malformed row at line {lineno}: non-finite count")
            if v < 0:
                raise DemandDataError(f"negative demand at line {lineno}")
            if sid not in cells:
                cells[sid] = {}
                order.append(sid)
            if (t, i) in cells[sid]:
                raise DemandDataError(f"duplicate cell ({sid}, {t}, {i}) at line {lineno}")
            cells[sid][(t, i)] = v
    if not order:
        raise DemandDataError("no demand rows")
    shapes = {}
    for sid in order:
        keys = cells[sid].keys()
        shapes[sid] = (max(t for t, _ in keys) + 1, max(i for _, i in keys) + 1)
    if len(set(shapes.values())) > 1:
        raise DemandDataError(f"inconsistent (T, n) across scenarios: {shapes}")
    T, n = shapes[order[0]]
    paths = np.zeros((len(order), T, n))
    for z, sid in enumerate(order):
        if len(cells[sid]) != T * n:
            missing = sorted({(t, i) for t in range(T) for i in range(n)} - cells[sid].keys())[:5]
            raise DemandDataError(f"scenario {sid!r} is missing cells {missing}")
        for (t, i), v in cells[sid].items():
            paths[z, t, i] = v
    return DemandScenarioSet(paths, ids=order)


def save_csv(ds, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for z, sid in enumerate(ds.ids):
            for t in range(ds.T):
                for i in range(ds.n):
                    w.writerow([sid, t, i, repr(float(ds.paths[z, t, i]))])


def weekly_rates(base_rates, trend_factor, day_offset=0):
    """Poisson rates ``(7, n, 24)`` for one week.

    ``base_rates`` is either a Monday profile ``(n, 24)``, scaled by
    ``trend_factor ** d`` on day ``d``, or a full ``(7, n, 24)`` array
    whose day ``d`` slice is scaled by ``trend_factor ** d``.
    ``day_offset`` shifts the exponent (7 gives the Monday after).
    """
    base = np.asarray(base_rates, dtype=float)
    if base.ndim == 2:
        base = np.broadcast_to(base, (DAYS,) + base.shape)
    if base.ndim != 3 or base.shape[0] != DAYS or base.shape[2] != HOURS:
        raise ValueError(f"base rates must be (n, 24) or (7, n, 24), got {base.shape}")
    if np.any(base < 0) or not np.all(np.isfinite(base)):
        raise ValueError("base rates must be finite and nonnegative")
    if not trend_factor > 0:
        raise ValueError("trend factor must be positive")
    scale = float(trend_factor) ** (np.arange(DAYS) + day_offset)
    return base * scale[:, None, None]


def generate_synthetic_weeks(base_rates, trend_factor=1.1, num_weeks=1, seed=None):
    """Poisson demand, one scenario per week with ``T = 168`` (day-major) periods."""
    rates = weekly_rates(base_rates, trend_factor)
    lam = np.transpose(rates, (0, 2, 1)).reshape(WEEK, -1)
    rng = np.random.default_rng(seed)
    paths = rng.poisson(lam, size=(num_weeks,) + lam.shape).astype(float)
    return DemandScenarioSet(paths, ids=[f"week{w}" for w in range(num_weeks)])


def day_periods(d):
    return slice(d * HOURS, (d + 1) * HOURS)


def as_weeks(ds):
    """View weekly paths ``(Z, 168, n)`` as ``(Z, 7, 24, n)``."""
    if ds.T != WEEK:
        raise DemandDataError(f"weekly data needs T = {WEEK}, got {ds.T}")
    return ds.paths.reshape(ds.Z, DAYS, HOURS, ds.n)
