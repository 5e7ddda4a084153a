"""
Report models shared by the numerical modules and the command-line surface.

RatioReport is the fitted-constant record of a sweep (kernel/envelope or
norm/norm ratios); reports merge associatively so sweeps can be split
across workers. SuiteReport is the JSON verdict document of ``cli verify``.
"""

import math
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator

from defaults import ENVELOPE, STATUS

Location = Tuple[float, float, float]


def _clean(value: Any) -> Any:
    """JSON-safe copy: numpy scalars to floats, non-finite floats to strings."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_clean(v) for v in value.tolist()]
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else repr(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


class RatioReport(BaseModel):
    """min/max of a ratio over a sweep, with locations and refinement drift."""

    name: str = ""
    min_ratio: float
    max_ratio: float
    argmin: Optional[Location] = None
    argmax: Optional[Location] = None
    sweep: Dict[str, Any] = Field(default_factory=dict)
    refinement_drift: Optional[float] = None
    status: str = STATUS["pass"]
    metrics: Dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _ordered(self) -> "RatioReport":
        if not (math.isnan(self.min_ratio) or math.isnan(self.max_ratio)) and self.min_ratio > self.max_ratio:
            raise ValueError(f"min_ratio {self.min_ratio} exceeds max_ratio {self.max_ratio}")
        return self

    @property
    def finite(self) -> bool:
        ceiling = ENVELOPE["ratio_ceiling"]
        return abs(self.min_ratio) < ceiling and abs(self.max_ratio) < ceiling

    @classmethod
    def empty(cls, name: str, sweep: Optional[Dict[str, Any]] = None) -> "RatioReport":
        return cls(name=name, min_ratio=0.0, max_ratio=0.0, sweep=sweep or {}, status=STATUS["empty"])

    @classmethod
    def from_ratios(
        cls,
        ratios: np.ndarray,
        locations: Sequence[np.ndarray],
        name: str = "",
        sweep: Optional[Dict[str, Any]] = None,
        metrics: Optional[Dict[str, Any]] = None,
    ) -> "RatioReport":
        """
        Build a report from an array of ratios.

        ``locations`` holds three arrays broadcastable to the shape of
        ``ratios`` giving (x, y, t) of every entry; non-finite ratios count
        toward the max (a kernel nonzero where the envelope vanishes is a
        failure). Ratios at or above the overflow ceiling are not finite.
        """
        ratios = np.asarray(ratios, dtype=float)
        if ratios.size == 0:
            return cls.empty(name, sweep)
        coords = [np.broadcast_to(np.asarray(c, dtype=float), ratios.shape).ravel() for c in locations]
        ratios = ratios.ravel()
        safe_min = np.where(np.isnan(ratios), np.inf, ratios)
        safe_max = np.where(np.isnan(ratios), np.inf, ratios)
        i_min = int(np.argmin(safe_min))
        i_max = int(np.argmax(safe_max))
        report = cls(
            name=name,
            min_ratio=float(safe_min[i_min]),
            max_ratio=float(safe_max[i_max]),
            argmin=tuple(float(c[i_min]) for c in coords),
            argmax=tuple(float(c[i_max]) for c in coords),
            sweep=sweep or {},
            metrics=metrics or {},
        )
        if not report.finite:
            report = report.model_copy(update={"status": STATUS["fail"]})
        return report

    def merge(self, other: "RatioReport") -> "RatioReport":
        """Associative min/max merge of two partial sweeps."""
        if self.status == STATUS["empty"]:
            return other
        if other.status == STATUS["empty"]:
            return self
        lo = self if self.min_ratio <= other.min_ratio else other
        hi = self if self.max_ratio >= other.max_ratio else other
        status = STATUS["fail"] if STATUS["fail"] in (self.status, other.status) else self.status
        return self.model_copy(
            update={
                "min_ratio": lo.min_ratio,
                "argmin": lo.argmin,
                "max_ratio": hi.max_ratio,
                "argmax": hi.argmax,
                "status": status,
                "metrics": {**other.metrics, **self.metrics},
            }
        )

    def with_refinement(self, coarse: "RatioReport") -> "RatioReport":
        """This report (fine grid) with drift of max_ratio relative to ``coarse``."""
        if coarse.max_ratio == 0.0 or not (self.finite and coarse.finite):
            drift = 0.0 if coarse.max_ratio == self.max_ratio else math.inf
        else:
            drift = abs(self.max_ratio - coarse.max_ratio) / abs(coarse.max_ratio)
        return self.model_copy(
            update={"refinement_drift": drift, "metrics": {**self.metrics, "coarse_max_ratio": coarse.max_ratio}}
        )

    def judged(self, max_drift: Optional[float] = None, max_spread: Optional[float] = None) -> "RatioReport":
        """PASS iff finite, drift within ``max_drift`` and max/min within ``max_spread``."""
        if self.status == STATUS["empty"]:
            return self
        ok = self.finite
        if ok and max_drift is not None and self.refinement_drift is not None:
            ok = self.refinement_drift <= max_drift
        if ok and max_spread is not None:
            ok = self.min_ratio > 0.0 and self.max_ratio / self.min_ratio <= max_spread
        return self.model_copy(update={"status": STATUS["pass"] if ok else STATUS["fail"]})

    def as_metrics(self) -> Dict[str, Any]:
        return _clean(
            {
                "min_ratio": self.min_ratio,
                "max_ratio": self.max_ratio,
                "argmin": self.argmin,
                "argmax": self.argmax,
                "refinement_drift": self.refinement_drift,
                "sweep": self.sweep,
                **self.metrics,
            }
        )


class TrendReport(BaseModel):
    """A monotone-trend record: values along a dyadic parameter sequence."""

    name: str = ""
    parameters: List[float]
    values: List[float]
    target: float
    reached_target: bool
    monotone: bool
    trusted_until: Optional[float] = None
    status: str = STATUS["pass"]

    def as_metrics(self) -> Dict[str, Any]:
        return _clean(self.model_dump(exclude={"name", "status"}))


class CheckResult(BaseModel):
    """One named check inside a suite."""

    name: str
    status: str
    metrics: Dict[str, Any] = Field(default_factory=dict)
    claim: str = ""

    @classmethod
    def from_report(cls, name: str, report: Any, claim: str) -> "CheckResult":
        return cls(name=name, status=report.status, metrics=report.as_metrics(), claim=claim)


class SuiteReport(BaseModel):
    """JSON verdict document: {suite, config_digest, checks}."""

    suite: str
    config_digest: str
    checks: List[CheckResult] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        ok = {STATUS["pass"], STATUS["divergence"], STATUS["inconclusive"], STATUS["empty"]}
        return all(check.status in ok for check in self.checks)

    def to_payload(self) -> Dict[str, Any]:
        return _clean(
            {
                "suite": self.suite,
                "config_digest": self.config_digest,
                "checks": [check.model_dump() for check in self.checks],
            }
        )
