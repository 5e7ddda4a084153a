"""
Coupling-constant parameterization of the Hardy operator.

C(sigma) = (1/pi) (Gamma(alpha) sin(pi alpha/2)
                   + Gamma(1+sigma) Gamma(alpha-sigma) sin(pi (2 sigma - alpha)/2))

is symmetric about (alpha-1)/2 and strictly increasing on [(alpha-1)/2, M),
M = alpha for alpha < 2 and M = infinity for alpha = 2. The critical coupling
is lambda_star = C((alpha-1)/2) and sigma(lambda) is the root on the right branch.
"""

import math
from typing import Dict, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.optimize import brentq

from defaults import COUPLING
from logger import event_logger
from specfun import gamma, log_gamma, sinpi
from utils import BracketError, DomainError, InputError, grow_geometrically

logger = event_logger(__name__)


class AdmissibilityError(InputError):
    """Coupling below the critical value lambda_star."""

    def __init__(self, lam: float, alpha: float, lambda_star: float):
        super().__init__(
            f"lambda={lam!r} is below the critical coupling lambda_star={lambda_star!r} for alpha={alpha!r}"
        )
        self.lam = lam
        self.alpha = alpha
        self.lambda_star = lambda_star


class PoleError(DomainError):
    """Gamma(alpha - sigma) evaluated at a pole."""


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha <= 2.0:
        raise DomainError(f"alpha must lie in (0, 2], got {alpha!r}")


def branch_end(alpha: float) -> float:
    """M: alpha for alpha < 2, +inf for alpha = 2."""
    _check_alpha(alpha)
    return math.inf if alpha == 2.0 else float(alpha)


def c_of_sigma(sigma: float, alpha: float, strict: bool = True) -> float:
    """
    Evaluate the coupling map C(sigma; alpha).

    For alpha = 2 the Gamma-sine product has removable singularities at
    sigma in {2, 3, ...}. By default a PoleError is raised there; with
    ``strict=False`` they are removed through the reflection formula.

    Raises:
        DomainError: sigma <= -1, or sigma >= alpha for alpha < 2
        PoleError: strict evaluation at a pole of Gamma(alpha - sigma)
    """
    _check_alpha(alpha)
    sigma = float(sigma)
    if sigma <= -1.0:
        raise DomainError(f"C(sigma) needs sigma > -1, got {sigma!r}")
    if alpha < 2.0 and sigma >= alpha:
        raise DomainError(f"C(sigma) needs sigma < M = {alpha!r}, got {sigma!r}")

    first = gamma(alpha) * sinpi(alpha / 2.0)
    gap = alpha - sigma
    if gap > 0.0:
        second = gamma(1.0 + sigma) * gamma(gap) * sinpi(sigma - alpha / 2.0)
    else:
        # only reachable for alpha = 2
        if strict and gap == math.floor(gap):
            raise PoleError(f"Gamma(alpha - sigma) has a pole at sigma={sigma!r}")
        # Gamma(2-sigma) sin(pi(sigma-1)) = pi / Gamma(sigma-1)
        second = math.pi * math.exp(log_gamma(1.0 + sigma) - log_gamma(sigma - 1.0))
    return (first + second) / math.pi


def lambda_star(alpha: float) -> float:
    """Critical coupling C((alpha-1)/2)."""
    _check_alpha(alpha)
    return c_of_sigma((alpha - 1.0) / 2.0, alpha, strict=False)


def _upper_bracket(lam: float, alpha: float, lo: float) -> float:
    if alpha < 2.0:
        # gap to the pole halves each step
        gap = grow_geometrically(
            lambda g: alpha - g > lo and c_of_sigma(alpha - g, alpha, strict=False) >= lam,
            start=(alpha - lo) / 2.0,
            step=lambda g: g / 2.0,
            max_steps=60,
            what=f"upper bracket for lambda={lam!r}",
        )
        return alpha - gap
    width = grow_geometrically(
        lambda w: c_of_sigma(lo + w, alpha, strict=False) >= lam,
        start=1.0,
        step=lambda w: 2.0 * w,
        max_steps=COUPLING["max_iter"],
        what=f"upper bracket for lambda={lam!r}",
    )
    return lo + width


def sigma_from_lambda(lam: float, alpha: float, method: str = "auto") -> float:
    """
    The unique sigma in [(alpha-1)/2, M) with C(sigma) = lambda.

    alpha = 2 uses the explicit root (1 + sqrt(1 + 4 lambda))/2 unless
    ``method="root"``; the bracketed root is ill-conditioned next to the
    critical coupling, where C has its minimum.

    Raises:
        AdmissibilityError: lambda < lambda_star - 1e-12
        BracketError: lambda beyond the numerically reachable range below the pole
    """
    _check_alpha(alpha)
    lam = float(lam)
    lo = (alpha - 1.0) / 2.0
    lam_star = c_of_sigma(lo, alpha, strict=False)
    if lam < lam_star - COUPLING["admissibility_slack"]:
        raise AdmissibilityError(lam, alpha, lam_star)
    if lam <= lam_star:
        return lo
    if alpha == 2.0 and method != "root":
        return sigma_closed_form(lam)

    hi = _upper_bracket(lam, alpha, lo)

    def residual(s: float) -> float:
        return c_of_sigma(s, alpha, strict=False) - lam

    if residual(hi) == 0.0:
        return hi
    try:
        sigma = brentq(residual, lo, hi, xtol=1e-15, rtol=4.0 * np.finfo(float).eps, maxiter=COUPLING["max_iter"])
    except (ValueError, RuntimeError) as exc:
        raise BracketError(f"sigma({lam!r}) root solve failed: {exc}") from exc
    error = abs(residual(sigma))
    if error > COUPLING["residual_tol"]:
        raise BracketError(f"sigma({lam!r}) residual {error:.3e} exceeds {COUPLING['residual_tol']}")
    return sigma


def sigma_closed_form(lam: float) -> float:
    """alpha = 2: sigma = (1 + sqrt(1 + 4 lambda)) / 2."""
    if lam < -0.25 - COUPLING["admissibility_slack"]:
        raise AdmissibilityError(lam, 2.0, -0.25)
    return 0.5 * (1.0 + math.sqrt(max(1.0 + 4.0 * lam, 0.0)))


def audit_branch(alpha: float, samples: int = 2000) -> Dict[str, float]:
    """
    Check that C increases on the right branch and record its behaviour near M.

    Returns:
        Dictionary with ``increasing`` (1.0/0.0), the smallest forward
        difference and the value at the last sample; for alpha = 2 also the
        largest deviation from sigma(sigma-1) (the removable-pole check).
    """
    _check_alpha(alpha)
    lo = (alpha - 1.0) / 2.0
    end = lo + 10.0 if alpha == 2.0 else alpha - 1e-3 * (alpha - lo)
    step = (end - lo) / samples
    values = [c_of_sigma(lo + i * step, alpha, strict=False) for i in range(samples + 1)]
    diffs = [b - a for a, b in zip(values[1:-1], values[2:])]
    audit = {
        "increasing": float(all(d > 0.0 for d in diffs)),
        "min_forward_difference": min(diffs),
        "value_at_end": values[-1],
        "sigma_end": end,
    }
    if alpha == 2.0:
        audit["closed_form_deviation"] = max(
            abs(c_of_sigma(lo + i * step, alpha, strict=False) - (lo + i * step) * (lo + i * step - 1.0))
            for i in range(0, samples + 1, 10)
        )
    logger.info_event("coupling_branch_audit", f"coupling branch audit alpha={alpha}", **audit)
    return audit


def conjectural_p_range(sigma: float) -> Tuple[float, float]:
    """Exponent range (1/(1 + min(sigma, 0)), -1/sigma) expected for negative coupling."""
    lo = 1.0 / (1.0 + min(sigma, 0.0))
    hi = -1.0 / sigma if sigma < 0.0 else math.inf
    return lo, hi


class ModelParams(BaseModel):
    """One model instance: alpha, lambda, sigma = sigma(lambda), dimension d and M."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    alpha: float = Field(..., gt=0.0, le=2.0, description="order of the fractional Laplacian")
    lam: float = Field(..., alias="lambda", description="coupling constant")
    sigma: float = Field(..., description="boundary exponent on the increasing branch")
    d: int = Field(1, ge=1, description="dimension used by envelope formulas")
    M: float = Field(..., description="branch end: alpha, or +inf for alpha = 2")

    @model_validator(mode="after")
    def _check_invariants(self) -> "ModelParams":
        lam_star = lambda_star(self.alpha)
        if self.lam < lam_star - COUPLING["admissibility_slack"]:
            raise AdmissibilityError(self.lam, self.alpha, lam_star)
        if self.M != branch_end(self.alpha):
            raise ValueError(f"M={self.M!r} does not match alpha={self.alpha!r}")
        if not (self.alpha - 1.0) / 2.0 - 1e-12 <= self.sigma < self.M:
            raise ValueError(f"sigma={self.sigma!r} is off the increasing branch")
        if abs(c_of_sigma(self.sigma, self.alpha, strict=False) - self.lam) > 1e-10:
            raise ValueError(f"C(sigma={self.sigma!r}) != lambda={self.lam!r}")
        if self.alpha == 2.0 and abs(self.sigma - sigma_closed_form(self.lam)) > 1e-12:
            raise ValueError("sigma disagrees with the alpha = 2 closed form")
        return self

    @classmethod
    def from_lambda(cls, alpha: float, lam: float, d: int = 1) -> "ModelParams":
        sigma = sigma_from_lambda(lam, alpha)
        return cls(alpha=alpha, lam=lam, sigma=sigma, d=d, M=branch_end(alpha))

    @classmethod
    def from_sigma(cls, alpha: float, sigma: float, d: int = 1) -> "ModelParams":
        lam = c_of_sigma(sigma, alpha, strict=False)
        return cls(alpha=alpha, lam=lam, sigma=sigma, d=d, M=branch_end(alpha))

    @property
    def lambda_star(self) -> float:
        return lambda_star(self.alpha)

    @property
    def q(self) -> float:
        """min{sigma, (alpha-1)_+}"""
        return min(self.sigma, max(self.alpha - 1.0, 0.0))

    @property
    def r(self) -> float:
        """-min{0, q}"""
        return max(0.0, -self.q)

    @property
    def critical(self) -> bool:
        return abs(self.lam - self.lambda_star) <= COUPLING["critical_tol"]

    @property
    def exploratory(self) -> bool:
        """alpha < 2 with negative coupling: the heat-kernel bounds are conjectural."""
        return self.alpha < 2.0 and self.lam < 0.0

    def summary(self) -> Dict[str, Optional[float]]:
        return {"alpha": self.alpha, "lambda": self.lam, "sigma": self.sigma, "d": self.d}
