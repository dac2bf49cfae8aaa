"""Numerical tolerances shared across the package."""

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    feas: float = 1e-8
    gap: float = 1e-7
    cs: float = 1e-7
    kkt: float = 1e-6
    staff: float = 1e-9
    certificate: float = 1e-7

    def with_overrides(self, **kwargs):
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})


TOL = Tolerances()

MAX_BINARIES = 2048
SCHEMA_VERSION = "1.0"
