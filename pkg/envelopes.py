"""
Closed-form kernel envelopes and comparability of discrete kernels against them.

Every envelope is evaluated in x_d, y_d and the Euclidean distance ``dist``,
so general-d formulas are available analytically even though kernels are
only computed on the half-line.
"""

import math
from typing import Any, Dict, Iterable, Literal, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import integrate

from coupling import ModelParams
from defaults import ENVELOPE, QUADRATURE, STATUS
from halfline import Grid
from logger import event_logger
from reports import RatioReport
from semigroup import SpectralDecomp, check_window, ptk_kernel
from utils import InputError, PreconditionError, QuadratureError

logger = event_logger(__name__)

EnvelopeKind = Literal[
    "heat_thm21",
    "complex_prop22",
    "ptk_prop25",
    "L_sec4",
    "M_sec4",
    "T_lem42",
    "H_lem42",
    "riesz_lem61_near",
    "riesz_lem61_far",
    "dyadic_sec5",
]

_RIESZ_KINDS = ("riesz_lem61_near", "riesz_lem61_far")


class EnvelopeParameterError(InputError):
    """Envelope parameters outside their admissible window."""


class GridMismatchError(InputError):
    """Two decompositions that must share a grid do not."""


class EnvelopeSpec(BaseModel):
    """An envelope formula with its free parameters; q and r always come from ``params``."""

    model_config = ConfigDict(frozen=True)

    kind: EnvelopeKind
    params: ModelParams
    beta: Optional[float] = Field(None, description="decay exponent of the section-4 envelopes, default alpha/2")
    epsilon: float = Field(ENVELOPE["epsilon"], gt=0.0, lt=1.0)
    k: int = Field(1, ge=1)
    gaussian_rate: float = Field(ENVELOPE["gaussian_rate"], gt=0.0)
    s: Optional[float] = Field(None, gt=0.0)

    @model_validator(mode="before")
    @classmethod
    def _default_beta(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("beta") is None and isinstance(data.get("params"), ModelParams):
            data = {**data, "beta": data["params"].alpha / 2.0}
        return data

    @model_validator(mode="after")
    def _check_window(self) -> "EnvelopeSpec":
        alpha, sigma, d = self.params.alpha, self.params.sigma, self.params.d
        if self.beta is None:
            raise EnvelopeParameterError("beta could not be defaulted from params")
        if not 0.0 < self.beta < alpha:
            raise EnvelopeParameterError(f"beta={self.beta!r} must lie in (0, alpha={alpha!r})")
        if self.kind in ("T_lem42", "H_lem42"):
            if alpha >= 2.0:
                raise EnvelopeParameterError(f"{self.kind} is defined for alpha < 2 only")
            if not min(0.0, alpha - 1.0) < sigma < alpha:
                raise EnvelopeParameterError(f"{self.kind} needs min(0, alpha-1) < sigma < alpha, got sigma={sigma!r}")
            if not max(alpha - 1.0, 0.0) < self.beta:
                raise EnvelopeParameterError(f"{self.kind} needs beta > (alpha-1)_+, got beta={self.beta!r}")
        if self.kind in _RIESZ_KINDS:
            if self.s is None:
                raise EnvelopeParameterError(f"{self.kind} needs s")
            s_max = min(2.0 * d / alpha, 2.0 * (d + 2.0 * sigma) / alpha)
            if not self.s < s_max:
                raise EnvelopeParameterError(f"{self.kind} needs s < {s_max!r}, got s={self.s!r}")
        return self

    @property
    def q(self) -> float:
        return self.params.q

    @property
    def r(self) -> float:
        return self.params.r

    def with_kind(self, kind: str, **update) -> "EnvelopeSpec":
        return EnvelopeSpec(**{**self.model_dump(exclude={"params"}), "params": self.params, "kind": kind, **update})


def _boundary(x: np.ndarray, length: np.ndarray, power: float) -> np.ndarray:
    return np.minimum(1.0, x / length) ** power


def _polynomial(length: np.ndarray, dist: np.ndarray, power: float) -> np.ndarray:
    return (length / (length + dist)) ** power


def _tail(spec: EnvelopeSpec, length: np.ndarray, t: np.ndarray, dist: np.ndarray, power: float) -> np.ndarray:
    """Polynomial tail for alpha < 2, Gaussian exp(-dist^2 / (c t)) for alpha = 2."""
    if spec.params.alpha < 2.0:
        return _polynomial(length, dist, power)
    return np.exp(-(dist**2) / (spec.gaussian_rate * t))


def eval_envelope(
    spec: EnvelopeSpec,
    x: np.ndarray,
    y: np.ndarray,
    t: np.ndarray,
    dist: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    Evaluate the envelope of ``spec.kind``; all arguments broadcast.

    ``t`` is |z| for complex_prop22 and is ignored by the Riesz and dyadic
    kinds. ptk_prop25 bounds the kernel of (tL)^k e^{-tL}, so its time
    prefactor is t^{-d/alpha}.
    """
    x, y, t = (np.asarray(a, dtype=float) for a in (x, y, t))
    dist = np.abs(x - y) if dist is None else np.asarray(dist, dtype=float)
    alpha, sigma, d = spec.params.alpha, spec.params.sigma, spec.params.d
    kind = spec.kind

    if kind in _RIESZ_KINDS:
        return _riesz(spec, x, y, dist)
    if kind == "dyadic_sec5":
        return schur_kernel(x, y, dist, spec.r, alpha, d)

    length = t ** (1.0 / alpha)
    prefactor = t ** (-d / alpha)
    hi = np.maximum(x, y)
    lo = np.minimum(x, y)

    if kind == "heat_thm21":
        return _boundary(x, length, sigma) * _boundary(y, length, sigma) * prefactor * _tail(
            spec, length, t, dist, d + alpha
        )
    if kind == "complex_prop22":
        return _boundary(x, length, sigma) * _boundary(y, length, sigma) * prefactor * _tail(
            spec, length, t, dist, (d + alpha) * (1.0 - spec.epsilon)
        )
    if kind == "ptk_prop25":
        return _boundary(x, length, sigma) * _boundary(y, length, sigma) * prefactor * _tail(
            spec, length, t, dist, d + alpha - spec.epsilon
        )
    if kind == "L_sec4":
        support = (hi <= length) | ((hi >= length) & (dist >= lo / 2.0))
        value = _boundary(x, length, spec.q) * _boundary(y, length, spec.q) * prefactor
        return np.where(support, value * _tail(spec, length, t, dist, d + spec.beta), 0.0)
    if kind == "M_sec4":
        support = (hi >= length) & (dist <= lo / 2.0)
        value = t * prefactor / hi**alpha
        return np.where(support, value * _tail(spec, length, t, dist, d + spec.beta), 0.0)
    if kind in ("T_lem42", "H_lem42"):
        power = sigma if kind == "T_lem42" else max(alpha - 1.0, 0.0)
        decay = d + spec.beta
        if alpha == 1.0:
            # logarithmic loss at alpha = 1
            decay -= ENVELOPE["alpha_one_epsilon"]
        return _boundary(x, length, power) * _boundary(y, length, power) * prefactor * _polynomial(
            length, dist, decay
        )
    raise EnvelopeParameterError(f"unknown envelope kind {kind!r}")


def _riesz(spec: EnvelopeSpec, x: np.ndarray, y: np.ndarray, dist: np.ndarray) -> np.ndarray:
    alpha, sigma, d, s = spec.params.alpha, spec.params.sigma, spec.params.d, spec.s
    with np.errstate(divide="ignore", invalid="ignore"):
        base = dist ** (alpha * s / 2.0 - d)
        if spec.kind == "riesz_lem61_near":
            return base * np.minimum(1.0, np.minimum(x, y) / dist) ** sigma
        value = base * (x * y / dist**2) ** sigma
        if alpha == 2.0:
            return value
        hi = np.maximum(x, y)
        threshold = alpha / 2.0 * (1.0 + s / 2.0)
        if sigma < threshold:
            factor = 1.0
        elif sigma == threshold:
            factor = 1.0 + np.log(dist / hi)
        else:
            factor = (dist / hi) ** (2.0 * sigma - 2.0 * threshold)
        return value * factor


def schur_kernel(
    x: np.ndarray, y: np.ndarray, dist: np.ndarray, r: float, alpha: float, d: int = 1
) -> np.ndarray:
    """((dist v x v y)/sqrt(xy))^{2r} (dist v x v y)^alpha / (dist v (x ^ y))^{d+alpha}."""
    top = np.maximum(dist, np.maximum(x, y))
    bottom = np.maximum(dist, np.minimum(x, y))
    return (top / np.sqrt(x * y)) ** (2.0 * r) * top**alpha / bottom ** (d + alpha)


def l_tilde(
    x: np.ndarray, y: np.ndarray, t: float, dist: np.ndarray, r: float, alpha: float, beta: float, d: int = 1
) -> np.ndarray:
    """The L-type kernel with boundary powers -r and strict indicators."""
    length = t ** (1.0 / alpha)
    hi = np.maximum(x, y)
    lo = np.minimum(x, y)
    support = (hi < length) | ((hi > length) & (dist > lo / 2.0))
    value = (
        _boundary(x, length, -r) * _boundary(y, length, -r) * t ** (-d / alpha) * _polynomial(length, dist, d + beta)
    )
    return np.where(support, value, 0.0)


def _sweep_nodes(grid: Grid, nodes: Optional[np.ndarray]) -> np.ndarray:
    return grid.interior() if nodes is None else np.asarray(nodes, dtype=int)


def comparability_report(
    kernels: Mapping[float, np.ndarray],
    spec: EnvelopeSpec,
    grid: Grid,
    nodes: Optional[np.ndarray] = None,
    near_diagonal: bool = False,
    two_sided: bool = True,
    name: Optional[str] = None,
) -> RatioReport:
    """
    min/max of kernel/envelope over times and node pairs.

    ``kernels`` maps t (|z| for complex kernels) to an n x n kernel matrix.
    Two-sided reports compare signed values and fail on negative kernel
    entries beyond noise; upper-only reports compare |kernel| and skip entries
    below the noise floor (a fraction of the largest |kernel| at that time).
    With ``near_diagonal`` only pairs with dist <= t^{1/alpha} enter.

    Raises:
        SweepWindowError: a time outside the trusted window
    """
    alpha = spec.params.alpha
    window = check_window(kernels.keys(), grid, alpha)
    idx = _sweep_nodes(grid, nodes)
    x = grid.nodes[idx][:, None]
    y = grid.nodes[idx][None, :]
    dist = np.abs(x - y)

    ratios, xs, ys, ts = [], [], [], []
    negative = 0.0
    for t, kernel in kernels.items():
        block = np.asarray(kernel)[np.ix_(idx, idx)]
        block = block.real if two_sided else np.abs(block)
        if two_sided:
            negative = min(negative, float(block.min()) / float(np.abs(block).max()))
        envelope = eval_envelope(spec, x, y, t, dist)
        mask = envelope > 0.0
        if not two_sided:
            mask &= block > ENVELOPE["noise_floor"] * float(block.max(initial=0.0))
        if near_diagonal:
            mask &= dist <= t ** (1.0 / alpha)
        xx, yy = np.broadcast_arrays(x, y)
        ratios.append(block[mask] / envelope[mask])
        xs.append(xx[mask])
        ys.append(yy[mask])
        ts.append(np.full(int(mask.sum()), float(t)))

    report = RatioReport.from_ratios(
        np.concatenate(ratios),
        [np.concatenate(xs), np.concatenate(ys), np.concatenate(ts)],
        name=name or spec.kind,
        sweep={
            "times": sorted(float(t) for t in kernels),
            "window": list(window),
            "nodes": int(idx.size),
            "near_diagonal": near_diagonal,
            "two_sided": two_sided,
            "noise_floor": None if two_sided else ENVELOPE["noise_floor"],
            "n": grid.n,
        },
        metrics={"min_relative_kernel": negative} if two_sided else {},
    )
    if two_sided and negative < -1e-10:
        logger.warning_event("negative_kernel", f"{report.name}: kernel has negative entries", relative=negative)
        report = report.model_copy(update={"status": STATUS["fail"]})
    return report


def _check_pair(decomp0: SpectralDecomp, decompL: SpectralDecomp) -> None:
    if not decomp0.grid.same_as(decompL.grid):
        raise GridMismatchError("difference kernels need both decompositions on the same grid")
    if decomp0.params.alpha != decompL.params.alpha:
        raise InputError(
            f"alpha differs between the decompositions ({decomp0.params.alpha!r} vs {decompL.params.alpha!r})"
        )
    if decomp0.params.lam != 0.0:
        raise InputError(f"the reference decomposition must have lambda = 0, got {decomp0.params.lam!r}")


def difference_kernel(decomp0: SpectralDecomp, decompL: SpectralDecomp, t: float) -> np.ndarray:
    """Q_t: kernel of t L_0 e^{-t L_0} - t L_lambda e^{-t L_lambda}."""
    _check_pair(decomp0, decompL)
    return ptk_kernel(decomp0, t, 1) - ptk_kernel(decompL, t, 1)


def _duhamel_weights(a: np.ndarray, b: np.ndarray, t: float) -> np.ndarray:
    """int_0^t e^{-(t-s)a} e^{-sb} ds for all pairs (a_i, b_j)."""
    a = a[:, None]
    b = b[None, :]
    low = np.minimum(a, b)
    gap = np.abs(a - b)
    safe = np.where(gap > 0.0, gap, 1.0)
    ratio = np.where(gap * t > 1e-300, -np.expm1(-t * gap) / (t * safe), 1.0)
    return t * np.exp(-t * low) * ratio


def duhamel_difference_kernel(
    decomp0: SpectralDecomp, decompL: SpectralDecomp, t: float, derivative: bool = False
) -> np.ndarray:
    """
    e^{-tL_0} - e^{-tL_lambda} as int_0^t e^{-(t-s)L_0} (L_lambda - L_0) e^{-sL_lambda} ds.

    The s-integral is done exactly per pair of eigenvalues; with ``derivative``
    the result is -t d/dt of the difference, i.e. Q_t.
    """
    _check_pair(decomp0, decompL)
    a, b = decomp0.eigenvalues, decompL.eigenvalues
    middle = decomp0.eigenvectors.T @ (decompL.assembly.form - decomp0.assembly.form) @ decompL.eigenvectors
    weights = _duhamel_weights(a, b, t)
    if derivative:
        weights = -t * (np.exp(-t * b)[None, :] - a[:, None] * weights)
    return decomp0.eigenvectors @ (weights * middle) @ decompL.eigenvectors.T


def difference_domination_report(
    decomp0: SpectralDecomp,
    decompL: SpectralDecomp,
    times: Sequence[float],
    beta: Optional[float] = None,
    nodes: Optional[np.ndarray] = None,
) -> RatioReport:
    """
    Fitted C in |Q_t| <= C (L_t + M_t); for alpha = 2 the Gaussian factors
    use the far-field upper rate. Entries of |Q_t| below the noise floor are
    skipped.
    """
    _check_pair(decomp0, decompL)
    params = decompL.params
    rate = ENVELOPE["far_upper_rate"] if params.alpha == 2.0 else ENVELOPE["gaussian_rate"]
    spec_l = EnvelopeSpec(kind="L_sec4", params=params, beta=beta, gaussian_rate=rate)
    spec_m = spec_l.with_kind("M_sec4")
    grid = decompL.grid
    check_window(times, grid, params.alpha)
    idx = _sweep_nodes(grid, nodes)
    x = grid.nodes[idx][:, None]
    y = grid.nodes[idx][None, :]
    dist = np.abs(x - y)
    xx, yy = np.broadcast_arrays(x, y)

    partial = None
    for t in times:
        q = np.abs(difference_kernel(decomp0, decompL, t)[np.ix_(idx, idx)])
        envelope = eval_envelope(spec_l, x, y, t, dist) + eval_envelope(spec_m, x, y, t, dist)
        mask = q > ENVELOPE["noise_floor"] * float(q.max(initial=0.0))
        report = RatioReport.from_ratios(
            q[mask] / envelope[mask], [xx[mask], yy[mask], np.full(int(mask.sum()), float(t))], name="difference"
        )
        partial = report if partial is None else partial.merge(report)
    return partial.model_copy(
        update={
            "sweep": {
                "times": list(times),
                "beta": spec_l.beta,
                "gaussian_rate": rate,
                "noise_floor": ENVELOPE["noise_floor"],
                "n": grid.n,
            }
        }
    )


def diagonal_decay_slope(
    decomp0: SpectralDecomp, decompL: SpectralDecomp, t: float, x_range: Optional[Tuple[float, float]] = None
) -> float:
    """
    Log-log slope of |Q_t(x, x)| in x on x >> t^{1/alpha}; the M envelope
    predicts -alpha.
    """
    grid = decompL.grid
    length = t ** (1.0 / decompL.params.alpha)
    lo, hi = x_range or (max(8.0 * length, 2.0), 0.5 * grid.x_max)
    idx = np.flatnonzero((grid.nodes >= lo) & (grid.nodes <= hi))
    if idx.size < 3:
        raise PreconditionError(f"no diagonal nodes in [{lo:.3g}, {hi:.3g}] for the decay fit")
    diagonal = np.abs(np.diag(difference_kernel(decomp0, decompL, t))[idx])
    slope, _ = np.polyfit(np.log(grid.nodes[idx]), np.log(diagonal), 1)
    return float(slope)


def _line_integral(integrand, points: Sequence[float]) -> float:
    lo, hi = min(points), max(points)
    total, error = 0.0, 0.0
    pieces = [(-np.inf, lo), (hi, np.inf)]
    if hi > lo:
        pieces.insert(1, (lo, hi))
    for a, b in pieces:
        value, err = integrate.quad(
            integrand, a, b, epsabs=QUADRATURE["scalar_abs_tol"], epsrel=QUADRATURE["scalar_rel_tol"], limit=200
        )
        total += value
        error += err
    if not math.isfinite(total) or error > 1e-6 * abs(total) + 1e-12:
        raise QuadratureError(f"composition integral did not converge (value {total!r}, error {error!r})")
    return total


class CompositionSample(NamedTuple):
    lhs: float
    rhs: float
    ratio: float


def composition_value(
    beta: float, s: float, t: float, x: float, y: float, N: int = 1, paired: bool = True
) -> CompositionSample:
    """
    int (st)^beta / ((s + |x-z|)^{N+beta} (u + |z-y|)^{N+beta}) dz against
    (s+t)^beta / ((s+t) + |x-y|)^{N+beta}; u = t when ``paired``, u = s otherwise.
    """
    if not 0.0 < beta <= 2.0:
        raise InputError(f"composition needs beta in (0, 2], got {beta!r}")
    if N != 1:
        raise InputError("composition integrals are evaluated on the line (N = 1) only")
    u = t if paired else s
    power = N + beta

    def integrand(z: float) -> float:
        return (s * t) ** beta / ((s + abs(x - z)) ** power * (u + abs(z - y)) ** power)

    lhs = _line_integral(integrand, (x, y))
    rhs = (s + t) ** beta / ((s + t) + abs(x - y)) ** power
    return CompositionSample(lhs, rhs, lhs / rhs)


def composition_check(
    beta: float, s: float, t: float, sample: Iterable[Tuple[float, float]], N: int = 1
) -> Dict[str, RatioReport]:
    """Ratio brackets of both pairings over the (x, y) sample: keys ``paired`` and ``as_displayed``."""
    pairs = list(sample)
    reports = {}
    for key, paired in (("paired", True), ("as_displayed", False)):
        ratios = [composition_value(beta, s, t, x, y, N, paired).ratio for x, y in pairs]
        reports[key] = RatioReport.from_ratios(
            np.array(ratios),
            [np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs]), np.full(len(pairs), t)],
            name=f"composition_{key}",
            sweep={"beta": beta, "s": s, "t": t, "N": N, "pairs": len(pairs)},
        )
    return reports


class DyadicSum(NamedTuple):
    lhs: float
    rhs: float
    ratio: float


def dyadic_sum_envelope(
    params: ModelParams,
    s: float,
    x: float,
    y: float,
    dist: Optional[float] = None,
    beta: Optional[float] = None,
    margin: int = 40,
) -> DyadicSum:
    """
    sum over N in 2^{alpha Z} of N^{-s/2} L~_N(x, y) y^{alpha s/2} against the
    Schur kernel envelope.

    The sum runs over t^{1/alpha} = 2^j for j within ``margin`` steps of the
    scales of (x, y, dist); both geometric tails are added in closed form.
    beta defaults to the midpoint of (alpha s/2, alpha), the window in which
    the sum converges at small N.

    Raises:
        PreconditionError: s outside (0, 2), -s/2 + 2r/alpha >= 0 or -s/2 + r/alpha <= -1
    """
    alpha, d, r = params.alpha, params.d, params.r
    dist = abs(x - y) if dist is None else float(dist)
    if not 0.0 < s < 2.0:
        raise PreconditionError(f"dyadic sum needs 0 < s < 2, got {s!r}")
    if not -s / 2.0 + 2.0 * r / alpha < 0.0:
        raise PreconditionError(f"-s/2 + 2r/alpha < 0 fails for s={s!r}, r={r!r}")
    if not -s / 2.0 + r / alpha > -1.0:
        raise PreconditionError(f"-s/2 + r/alpha > -1 fails for s={s!r}, r={r!r}")
    beta = (alpha * s / 2.0 + alpha) / 2.0 if beta is None else beta
    if not alpha * s / 2.0 < beta < alpha:
        raise PreconditionError(f"beta={beta!r} must lie in (alpha s/2, alpha) for the sum to converge")

    scales = [v for v in (x, y, dist) if v > 0.0]
    j_lo = math.floor(math.log2(min(scales))) - margin
    j_hi = math.ceil(math.log2(max(scales))) + margin
    lengths = 2.0 ** np.arange(j_lo, j_hi + 1, dtype=float)
    times = lengths**alpha
    terms = np.array(
        [t ** (-s / 2.0) * float(l_tilde(np.array(x), np.array(y), t, np.array(dist), r, alpha, beta, d)) for t in times]
    )
    terms *= y ** (alpha * s / 2.0)

    # geometric tails: ratios per dyadic step of the two asymptotic regimes
    small = 2.0 ** -(beta - alpha * s / 2.0)
    large = 2.0 ** -(d + alpha * s / 2.0 - 2.0 * r)
    lhs = float(terms.sum() + terms[0] * small / (1.0 - small) + terms[-1] * large / (1.0 - large))
    rhs = float(schur_kernel(np.array(x), np.array(y), np.array(dist), r, alpha, d))
    return DyadicSum(lhs, rhs, lhs / rhs)
