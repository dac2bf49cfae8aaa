"""Weekly rate profiles and next-day forecasts.

A weekly profile is a ``(7, n, 24)`` array of hourly rates. The benchmark
profile is the element-wise mean of the training weeks; the corrected
profile replaces each day by a decision-corrected rate built from that day's
scenarios. Either is turned into a Monday forecast by a forecaster.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from .correction import (
    NONEXISTENT,
    CorrectionError,
    construct_lambda_from_certificate,
    construct_universal_lambda,
    resolve_check,
)
from .demand import DAYS, HOURS, as_weeks, day_periods
from .existence import membership_in_b
from .twostage import solve_saa

log = logging.getLogger(__name__)

AVERAGE = "average"
CORRECTED = "corrected"


@dataclass
class WeeklyProfile:
    """Hourly rates ``(7, n, 24)``, day-major from Monday."""

    rates: np.ndarray
    provenance: str = AVERAGE
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        r = np.array(self.rates, dtype=float)
        if r.ndim != 3 or r.shape[0] != DAYS or r.shape[2] != HOURS:
            raise ValueError(f"weekly profile must be (7, n, 24), got {r.shape}")
        if not np.all(np.isfinite(r)) or np.any(r < 0):
            raise ValueError("weekly profile must be finite and nonnegative")
        self.rates = r

    @property
    def n(self):
        return self.rates.shape[1]

    def series(self):
        """Per-class hourly series ``(n, 168)``."""
        return self.rates.transpose(1, 0, 2).reshape(self.n, DAYS * HOURS)

    def day(self, d):
        """Rates of day ``d`` as a ``(24, n)`` fluid profile."""
        return self.rates[d].T.copy()

    def to_dict(self):
        return {"provenance": self.provenance, "rates": self.rates.tolist(), "info": self.info}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["rates"], dtype=float), d.get("provenance", AVERAGE), d.get("info", {}))


def average_weekly_profile(ds):
    """Element-wise weighted mean of the weekly paths in ``ds``."""
    weeks = as_weeks(ds)  # (Z, 7, 24, n)
    mean = np.tensordot(ds.weights, weeks, axes=1)
    return WeeklyProfile(mean.transpose(0, 2, 1), AVERAGE)


def _fallback_lambda(net, b_star, T):
    """Constant profile on the cheapest activity of each staffed pool.

    Used only when no corrected profile exists; the result is flagged.
    """
    try:
        lam, _ = construct_universal_lambda(net, b_star, T)
        return lam
    except CorrectionError:
        x = np.zeros(net.k)
        cost = net.activity_cost()
        for h in np.nonzero(b_star > 0)[0]:
            acts = net.activities_of_pool(h)
            j = int(acts[np.argmin(cost[acts])])
            x[j] = b_star[h] / net.A[h, j]
        return np.tile(net.R @ x, (T, 1))


def corrected_weekly_profile(net, ds, smooth=False, time_limit=None, check=True):
    """Decision-corrected rates, one day at a time.

    For each weekday the 24-hour scenarios of all weeks are staffed by
    sample average, a price certificate is computed for that staffing and
    the certificate's witnesses give the day's rates.

    Parameters
    ----------
    net : ServiceNetwork
        The (sub-)network whose classes match ``ds``.
    ds : DemandScenarioSet
        Weekly paths with ``T = 168``.
    smooth : bool
        Prefer certificates with small hour-to-hour changes.
    check : bool
        Record the re-solve check for every day.

    Returns
    -------
    WeeklyProfile
        ``info`` holds per-day ``b_star``, outcome and check results; days
        without a certificate are listed under ``"flagged_days"``.
    """
    as_weeks(ds)
    rates = np.zeros((DAYS, net.n, HOURS))
    days, flagged = [], []
    for d in range(DAYS):
        day_ds = ds.restrict(periods=day_periods(d))
        saa = solve_saa(net, day_ds)
        mem = membership_in_b(net, HOURS, saa.b, smooth=smooth, time_limit=time_limit)
        rec = {"day": d, "b_star": saa.b.tolist(), "saa_objective": saa.objective}
        if mem.in_b:
            lam, _ = construct_lambda_from_certificate(net, saa.b, mem.certificate)
            rec["outcome"] = "certificate"
            if mem.objective is not None:
                rec["smooth_objective"] = mem.objective
        else:
            lam = _fallback_lambda(net, saa.b, HOURS)
            rec["outcome"] = NONEXISTENT
            flagged.append(d)
            log.warning("no corrected rate for day %d; using the constant fallback", d)
        if check:
            rec["check_passed"] = resolve_check(net, lam, day_ds, saa.b, saa.objective).passed
        rates[d] = lam.T
        days.append(rec)
    return WeeklyProfile(rates, CORRECTED, {"days": days, "flagged_days": flagged, "smooth": bool(smooth)})


def _log_growth(totals):
    """Least-squares daily growth factor of positive totals (1 if undetermined)."""
    d = np.nonzero(totals > 0)[0]
    if d.size < 2:
        return 1.0
    slope = np.polyfit(d.astype(float), np.log(totals[d]), 1)[0]
    return float(np.exp(slope))


class SeasonalNaiveForecaster(BaseEstimator):
    """Monday of the profile scaled by the fitted week-over-week growth.

    The daily growth ``g`` of each class is the least-squares slope of the
    log daily totals; the forecast is ``Monday * g ** 7``.

    Parameters
    ----------
    per_class : bool, default=True
        Fit a growth factor per class rather than one for all classes.
    """

    kind = "seasonal-naive-24"

    def __init__(self, per_class=True):
        self.per_class = per_class

    def fit(self, profile, y=None):
        profile = profile if isinstance(profile, WeeklyProfile) else WeeklyProfile(profile)
        totals = profile.rates.sum(axis=2)  # (7, n)
        if self.per_class:
            self.growth_ = np.array([_log_growth(totals[:, i]) for i in range(profile.n)])
        else:
            self.growth_ = np.full(profile.n, _log_growth(totals.sum(axis=1)))
        self.monday_ = profile.rates[0].T.copy()
        self.n_classes_ = profile.n
        return self

    def predict(self, X=None):
        """Next-Monday rates ``(24, n)``."""
        return np.maximum(self.monday_ * self.growth_ ** DAYS, 0.0)


class AR1SeasonalForecaster(BaseEstimator):
    """Least-squares ``x_t = a x_{t-1} + s x_{t-24} + mu`` per class, rolled forward.

    Parameters
    ----------
    horizon : int, default=24
        Steps to forecast.
    """

    kind = "ar1-plus-seasonal"

    def __init__(self, horizon=HOURS):
        self.horizon = horizon

    def fit(self, profile, y=None):
        profile = profile if isinstance(profile, WeeklyProfile) else WeeklyProfile(profile)
        series = profile.series()
        coefs = np.zeros((profile.n, 3))
        for i, x in enumerate(series):
            if not np.any(x):
                continue
            X = np.column_stack([x[HOURS - 1 : -1], x[: -HOURS], np.ones(x.size - HOURS)])
            coefs[i] = np.linalg.lstsq(X, x[HOURS:], rcond=None)[0]
        self.coef_ = coefs
        self.history_ = series
        self.n_classes_ = profile.n
        return self

    def predict(self, X=None):
        out = np.zeros((self.horizon, self.n_classes_))
        for i, x in enumerate(self.history_):
            if not np.any(x):
                continue
            a, s, mu = self.coef_[i]
            hist = list(x)
            for _ in range(self.horizon):
                hist.append(a * hist[-1] + s * hist[-HOURS] + mu)
            out[:, i] = hist[-self.horizon :]
        return np.maximum(out, 0.0)


FORECASTERS = {"naive": SeasonalNaiveForecaster, "ar1": AR1SeasonalForecaster}


def make_forecaster(name):
    try:
        return FORECASTERS[name]()
    except KeyError:
        raise ValueError(f"unknown forecaster {name!r}; choose from {sorted(FORECASTERS)}") from None


def forecast_next_day(profile, forecaster="naive"):
    """Fit ``forecaster`` (name or estimator) to ``profile`` and predict ``(24, n)`` rates."""
    est = make_forecaster(forecaster) if isinstance(forecaster, str) else forecaster
    return est.fit(profile).predict()
