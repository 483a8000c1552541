"""Result containers shared by all checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


def _plain(x):
    """Convert numpy scalars/arrays into JSON-friendly Python values."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_plain(v) for v in x.tolist()]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    return x


@dataclass
class RatioReport:
    """Per-time sup/inf of u / P_t u0 over the unmasked grid."""

    times: list = field(default_factory=list)
    sup_ratio: list = field(default_factory=list)
    inf_ratio: list = field(default_factory=list)
    masked_fraction: list = field(default_factory=list)

    def add(self, row: dict):
        self.times.append(row["t"])
        self.sup_ratio.append(row["sup"])
        self.inf_ratio.append(row["inf"])
        self.masked_fraction.append(row["masked_fraction"])

    @property
    def C_emp(self) -> float:
        if not self.times:
            return math.nan
        return float(max(max(self.sup_ratio), 1.0 / min(self.inf_ratio)))

    def as_dict(self) -> dict:
        return {"times": self.times, "sup_ratio": self.sup_ratio, "inf_ratio": self.inf_ratio,
                "masked_fraction": self.masked_fraction, "C_emp": self.C_emp}


@dataclass
class RateFit:
    """Least-squares line through (abscissae, ordinates), both already in log form."""

    abscissae: np.ndarray
    ordinates: np.ndarray
    slope: float
    intercept: float
    r2: float

    @classmethod
    def fit(cls, x, y) -> "RateFit":
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.size < 4:
            raise ValueError(f"rate fit needs at least 4 points, got {x.size}")
        slope, intercept = np.polyfit(x, y, 1)
        resid = y - (slope * x + intercept)
        ss = np.sum((y - y.mean()) ** 2)
        r2 = 1.0 - np.sum(resid ** 2) / ss if ss > 0 else 1.0
        return cls(x, y, float(slope), float(intercept), float(r2))

    def as_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "r2": self.r2,
                "n_points": int(self.abscissae.size)}


@dataclass
class CheckResult:
    """Outcome of one check.

    ``passed`` is derived from ``measured`` against ``tolerance`` inside each
    check; ``status`` is "pass", "fail" or "trivial" (b = 0 and similar).
    ``tables`` holds sweep columns for CSV/plot emission and is not part of
    the JSON record.
    """

    check: str
    params: dict
    measured: dict
    tolerance: dict
    passed: bool
    status: str = ""
    artifact_paths: list = field(default_factory=list)
    tables: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.passed = bool(self.passed)
        if not self.status:
            self.status = "pass" if self.passed else "fail"

    def to_json(self) -> dict:
        return {"check": self.check, "params": _plain(self.params),
                "measured": _plain(self.measured), "tolerance": _plain(self.tolerance),
                "pass": self.passed, "status": self.status,
                "artifact_paths": list(self.artifact_paths)}
