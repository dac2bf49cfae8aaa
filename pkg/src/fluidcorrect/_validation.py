"""Input checks shared by the functional API and the estimators."""

import numpy as np


def check_demand_paths(paths):
    """Coerce to a float ``(Z, T, n)`` array of finite nonnegative values."""
    arr = np.array(paths, dtype=float)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3:
        raise ValueError(f"demand paths must be (Z, T, n) or (T, n), got shape {arr.shape}")
    if 0 in arr.shape:
        raise ValueError("demand paths must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError("demand contains non-finite values")
    if np.any(arr < 0):
        raise ValueError("demand must be nonnegative")
    return arr


def check_profile(lam, n=None):
    """Coerce an arrival-rate profile to a ``(T, n)`` nonnegative array."""
    lam = np.array(lam, dtype=float)
    if lam.ndim == 1:
        lam = lam[None]
    if lam.ndim != 2:
        raise ValueError(f"arrival-rate profile must be (T, n), got shape {lam.shape}")
    if n is not None and lam.shape[1] != n:
        raise ValueError(f"profile has {lam.shape[1]} classes, network has {n}")
    if not np.all(np.isfinite(lam)) or np.any(lam < 0):
        raise ValueError("arrival rates must be finite and nonnegative")
    return lam


def check_staffing(b, m):
    b = np.array(b, dtype=float).ravel()
    if b.size != m:
        raise ValueError(f"staffing vector has length {b.size}, network has {m} pools")
    if not np.all(np.isfinite(b)) or np.any(b < 0):
        raise ValueError("staffing must be finite and nonnegative")
    return b


def as_scenarios(X, n=None):
    """Accept a DemandScenarioSet or an array of paths."""
    from .demand import DemandScenarioSet

    ds = X if isinstance(X, DemandScenarioSet) else DemandScenarioSet(X)
    if n is not None and ds.n != n:
        raise ValueError(f"demand has {ds.n} classes, network has {n}")
    return ds
