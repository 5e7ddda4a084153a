"""
Spectral calculus on the discrete Hardy operator.

A decomposition solves A v = mu W v through the symmetric matrix
W^{-1/2} A W^{-1/2}; with V = W^{-1/2} Y the eigenvectors are W-orthonormal,
the kernel of f(L) is V f(Lambda) V^T and f(L) g = V f(Lambda) V^T W g.
Everything downstream (heat semigroups, fractional powers, square functions)
is a function of the spectrum evaluated through these two formulas.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import linalg

from coupling import ModelParams
from defaults import ANALYSIS, QUADRATURE, SPECTRAL, STATUS, TEST_FUNCTIONS, TRUSTED_WINDOW
from halfline import Grid, OperatorAssembly
from logger import event_logger
from reports import RatioReport, TrendReport
from specfun import bessel_ie, gamma
from utils import DomainError, InputError, NumericalError, dyadic_range

logger = event_logger(__name__)


class ConvergenceError(NumericalError):
    """Eigendecomposition residual or orthonormality outside tolerance."""

    def __init__(self, message: str, diagnostics: Dict[str, float]):
        super().__init__(message)
        self.diagnostics = diagnostics


class SpectralFloorError(NumericalError):
    """Negative power requested without a spectral gap."""


class SectorError(InputError):
    """Complex time outside the sector |arg z| <= pi/4."""


class SweepWindowError(InputError):
    """Time outside the trusted window of the grid."""


class CoverageError(InputError):
    """Time quadrature does not cover the spectrum."""


@dataclass(frozen=True, eq=False)
class SpectralDecomp:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    assembly: OperatorAssembly
    diagnostics: Dict[str, float] = field(default_factory=dict)

    @property
    def params(self) -> ModelParams:
        return self.assembly.params

    @property
    def grid(self) -> Grid:
        return self.assembly.grid

    @property
    def weights(self) -> np.ndarray:
        return self.assembly.mass

    @property
    def mu_min(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def mu_max(self) -> float:
        return float(self.eigenvalues[-1])

    @property
    def floor(self) -> float:
        return SPECTRAL["floor"] * abs(self.mu_max)

    def nonnegative(self) -> np.ndarray:
        """Eigenvalues clipped at 0 (discretization noise below the critical coupling)."""
        return np.maximum(self.eigenvalues, 0.0)

    def coefficients(self, f: np.ndarray) -> np.ndarray:
        """Spectral coordinates V^T W f; columns of ``f`` are separate functions."""
        f = np.asarray(f)
        w = self.weights if f.ndim == 1 else self.weights[:, None]
        return self.eigenvectors.T @ (w * f)

    def synthesize(self, coeffs: np.ndarray) -> np.ndarray:
        return self.eigenvectors @ coeffs

    def apply(self, values: np.ndarray, f: np.ndarray) -> np.ndarray:
        """g(L) f for spectral multiplier values g(mu_k)."""
        c = self.coefficients(f)
        if c.ndim == 1:
            return self.eigenvectors @ (values * c)
        return self.eigenvectors @ (values[:, None] * c)

    def kernel(self, values: np.ndarray) -> np.ndarray:
        """Kernel matrix K_ij of g(L): (g(L) f)_i = sum_j K_ij w_j f_j."""
        return (self.eigenvectors * values[None, :]) @ self.eigenvectors.T

    def operator(self, values: np.ndarray) -> np.ndarray:
        return self.kernel(values) * self.weights[None, :]

    def compose(self, left: np.ndarray, right: np.ndarray) -> np.ndarray:
        """Weighted kernel composition sum_j K(x_i, x_j) w_j K'(x_j, x_l)."""
        return (left * self.weights[None, :]) @ right


def decompose(assembly: OperatorAssembly) -> SpectralDecomp:
    """
    Full symmetric eigendecomposition of the assembled operator.

    Raises:
        ConvergenceError: residual above 1e-9 ||A|| or W-orthonormality defect above 1e-10
    """
    mass = assembly.mass
    scale = 1.0 / np.sqrt(mass)
    sym = scale[:, None] * assembly.form * scale[None, :]
    mu, y = linalg.eigh(sym)
    v = scale[:, None] * y

    norm_a = float(np.abs(mu).max()) * float(mass.max())
    residual_cols = assembly.form @ v - (mass[:, None] * v) * mu[None, :]
    col_norms = np.linalg.norm(v, axis=0)
    residual = float((np.linalg.norm(residual_cols, axis=0) / col_norms).max()) / norm_a if norm_a > 0.0 else 0.0
    gram = v.T @ (mass[:, None] * v)
    ortho = float(np.abs(gram - np.eye(mu.size)).max())
    top = float(np.abs(mu).max())

    diagnostics = {
        "residual": residual,
        "orthonormality_defect": ortho,
        "mu_min": float(mu[0]),
        "mu_max": float(mu[-1]),
        "positivity_ok": float(mu[0] >= -1e-8 * top),
    }
    if residual > SPECTRAL["residual_tol"] or ortho > SPECTRAL["orthonormality_tol"]:
        logger.error_event("decomposition_failed", "eigendecomposition outside tolerance", **diagnostics)
        raise ConvergenceError(
            f"eigendecomposition residual {residual:.3e}, orthonormality defect {ortho:.3e}", diagnostics
        )
    logger.info_event("decomposition", f"decomposed n={mu.size} operator", **diagnostics)
    return SpectralDecomp(eigenvalues=mu, eigenvectors=v, assembly=assembly, diagnostics=diagnostics)


def trusted_window(grid: Grid, alpha: float) -> Tuple[float, float]:
    """Times with t^{1/alpha} in [3 h_min, x_max / 8]."""
    return (
        (TRUSTED_WINDOW["low"] * grid.h_min) ** alpha,
        (grid.x_max / TRUSTED_WINDOW["high"]) ** alpha,
    )


def check_window(times: Iterable[float], grid: Grid, alpha: float) -> Tuple[float, float]:
    lo, hi = trusted_window(grid, alpha)
    for t in times:
        if not lo * (1.0 - 1e-12) <= t <= hi * (1.0 + 1e-12):
            raise SweepWindowError(f"t={t!r} outside the trusted window [{lo:.6g}, {hi:.6g}]")
    return lo, hi


def dyadic_times(grid: Grid, alpha: float) -> Tuple[float, ...]:
    """Powers of two inside the trusted window."""
    return dyadic_range(*trusted_window(grid, alpha))


def heat_kernel(decomp: SpectralDecomp, t: float) -> np.ndarray:
    if not t > 0.0:
        raise DomainError(f"heat_kernel needs t > 0, got {t!r}")
    return decomp.kernel(np.exp(-t * decomp.eigenvalues))


def ptk_multiplier(mu: np.ndarray, t: float, k: int) -> np.ndarray:
    tm = t * mu
    return tm**k * np.exp(-tm)


def ptk_kernel(decomp: SpectralDecomp, t: float, k: int) -> np.ndarray:
    """Kernel of (tL)^k e^{-tL}."""
    if not t > 0.0:
        raise DomainError(f"ptk_kernel needs t > 0, got {t!r}")
    if k < 1:
        raise DomainError(f"ptk_kernel needs k >= 1, got {k!r}")
    return decomp.kernel(ptk_multiplier(decomp.eigenvalues, t, k))


def _check_sector(z: complex) -> None:
    z = complex(z)
    if not z.real > 0.0:
        raise SectorError(f"complex time needs Re z > 0, got {z!r}")
    if abs(math.atan2(z.imag, z.real)) > math.pi / 4.0 - SPECTRAL["sector_margin"]:
        raise SectorError(f"|arg z| must not exceed pi/4, got arg={math.atan2(z.imag, z.real)!r}")


def complex_heat(decomp: SpectralDecomp, z: complex) -> np.ndarray:
    """Complex kernel of e^{-zL} for z in the closed sector |arg z| <= pi/4."""
    _check_sector(z)
    return decomp.kernel(np.exp(-complex(z) * decomp.eigenvalues))


def cauchy_ptk_kernel(
    decomp: SpectralDecomp, t: float, k: int, eta: float = 0.5, nodes: int = 64
) -> np.ndarray:
    """
    (tL)^k e^{-tL} from complex-time kernels on the circle |xi - t| = eta t.

    L^k e^{-tL} = (-1)^k k!/(2 pi i) oint e^{-xi L} (xi - t)^{-k-1} dxi; the
    trapezoid rule on the circle has error of order eta^nodes uniformly in mu.
    """
    if not 0.0 < eta < math.sin(math.pi / 4.0):
        raise DomainError(f"eta must lie in (0, sin(pi/4)) to keep the circle in the sector, got {eta!r}")
    rho = eta * t
    total = np.zeros((decomp.grid.n, decomp.grid.n), dtype=complex)
    for theta in 2.0 * math.pi * np.arange(nodes) / nodes:
        shift = rho * complex(math.cos(theta), math.sin(theta))
        total += complex_heat(decomp, t + shift) * shift ** (-k)
    factor = (-1) ** k * math.factorial(k) * t**k / nodes
    return (factor * total).real


def weighted_complex_bound(decomp: SpectralDecomp, z: complex) -> float:
    """sup |w_z(x) p_z(x,y) w_z(y)| |z|^{d/alpha} with w_z(x) = (1 + |z|^{1/alpha}/x)^sigma."""
    params = decomp.params
    kernel = complex_heat(decomp, z)
    idx = decomp.grid.interior()
    length = abs(z) ** (1.0 / params.alpha)
    w = (1.0 + length / decomp.grid.nodes[idx]) ** params.sigma
    block = np.abs(kernel[np.ix_(idx, idx)]) * w[:, None] * w[None, :]
    return float(block.max()) * abs(z) ** (params.d / params.alpha)


@dataclass(frozen=True, eq=False)
class FractionalPower:
    s: float
    sign: str
    values: np.ndarray
    decomp: SpectralDecomp

    @property
    def kernel(self) -> np.ndarray:
        return self.decomp.kernel(self.values)

    @property
    def operator(self) -> np.ndarray:
        return self.decomp.operator(self.values)

    def apply(self, f: np.ndarray) -> np.ndarray:
        return self.decomp.apply(self.values, f)


def power_values(decomp: SpectralDecomp, exponent: float) -> np.ndarray:
    """mu^exponent; negative exponents need mu_1 above the spectral floor."""
    if exponent >= 0.0:
        return decomp.nonnegative() ** exponent
    if decomp.mu_min <= decomp.floor:
        raise SpectralFloorError(
            f"mu_1={decomp.mu_min:.3e} is below the spectral floor {decomp.floor:.3e}; negative powers are undefined"
        )
    return decomp.eigenvalues**exponent


def frac_power(decomp: SpectralDecomp, s: float, sign: str = "+") -> FractionalPower:
    """L^{s/2} (sign '+') or the Riesz potential L^{-s/2} (sign '-')."""
    if sign not in ("+", "-"):
        raise DomainError(f"sign must be '+' or '-', got {sign!r}")
    exponent = s / 2.0 if sign == "+" else -s / 2.0
    return FractionalPower(s=s, sign=sign, values=power_values(decomp, exponent), decomp=decomp)


class LogQuadrature(BaseModel):
    """Trapezoid rule in log t on [t_min, t_max]."""

    model_config = ConfigDict(frozen=True)

    t_min: float = Field(..., gt=0.0)
    t_max: float = Field(..., gt=0.0)
    points_per_decade: int = Field(QUADRATURE["points_per_decade"], ge=2)

    @classmethod
    def covering(cls, *decomps: SpectralDecomp) -> "LogQuadrature":
        """Default rule for one or more decompositions, wider than the coverage minimum."""
        top = max(d.mu_max for d in decomps)
        bottom = min(d.mu_min for d in decomps)
        if not bottom > 0.0:
            raise CoverageError(f"no spectral gap (mu_1={bottom:.3e}); large times cannot be covered")
        return cls(
            t_min=QUADRATURE["default_t_min_factor"] / top,
            t_max=QUADRATURE["default_t_max_factor"] / bottom,
        )

    def nodes_and_weights(self) -> Tuple[np.ndarray, np.ndarray]:
        decades = math.log10(self.t_max / self.t_min)
        count = max(int(math.ceil(decades * self.points_per_decade)) + 1, 2)
        u = np.linspace(math.log(self.t_min), math.log(self.t_max), count)
        weights = np.full(count, u[1] - u[0])
        weights[[0, -1]] *= 0.5
        return np.exp(u), weights

    def check_coverage(self, decomp: SpectralDecomp) -> None:
        """
        Raises:
            CoverageError: t_min > 0.01/mu_n, t_max < 100/mu_1 or fewer than 40 points per decade
        """
        problems = []
        if self.t_min > QUADRATURE["t_min_factor"] / decomp.mu_max:
            problems.append(f"t_min={self.t_min:.3e} > {QUADRATURE['t_min_factor']}/mu_n")
        if not decomp.mu_min > 0.0 or self.t_max < QUADRATURE["t_max_factor"] / decomp.mu_min:
            problems.append(f"t_max={self.t_max:.3e} < {QUADRATURE['t_max_factor']}/mu_1")
        if self.points_per_decade < QUADRATURE["points_per_decade"]:
            problems.append(f"{self.points_per_decade} points per decade < {QUADRATURE['points_per_decade']}")
        if problems:
            raise CoverageError("time quadrature does not cover the spectrum: " + "; ".join(problems))


def balakrishnan_power(
    decomp: SpectralDecomp, gamma_: float, f: np.ndarray, quad: Optional[LogQuadrature] = None
) -> np.ndarray:
    """
    L^gamma f = (1/Gamma(1-gamma)) int_0^inf u^{1-gamma} L e^{-uL} f du/u, 0 < gamma < 1.

    The part below t_min is added in closed form with e^{-uL} replaced by I.
    """
    if not 0.0 < gamma_ < 1.0:
        raise DomainError(f"balakrishnan_power needs 0 < gamma < 1, got {gamma_!r}")
    quad = quad or LogQuadrature.covering(decomp)
    mu = decomp.nonnegative()
    times, weights = quad.nodes_and_weights()
    values = np.zeros_like(mu)
    for t, w in zip(times, weights):
        values += w * t ** (1.0 - gamma_) * mu * np.exp(-t * mu)
    values += mu * quad.t_min ** (1.0 - gamma_) / (1.0 - gamma_)
    return decomp.apply(values / gamma(1.0 - gamma_), f)


def dirichlet_images_kernel(x: np.ndarray, y: np.ndarray, t: float) -> np.ndarray:
    """alpha = 2, lambda = 0: (4 pi t)^{-1/2} (e^{-(x-y)^2/4t} - e^{-(x+y)^2/4t})."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    gauss = np.exp(-((x - y) ** 2) / (4.0 * t))
    # 1 - e^{-xy/t} without cancellation
    return gauss * -np.expm1(-x * y / t) / math.sqrt(4.0 * math.pi * t)


def bessel_heat_kernel(x: np.ndarray, y: np.ndarray, t: float, sigma: float) -> np.ndarray:
    """alpha = 2: (sqrt(xy)/2t) e^{-(x-y)^2/4t} e^{-z} I_{sigma-1/2}(z), z = xy/2t."""
    nu = sigma - 0.5
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    z = x * y / (2.0 * t)
    scaled = np.vectorize(lambda zz: bessel_ie(nu, zz), otypes=[float])(z)
    return np.sqrt(x * y) / (2.0 * t) * np.exp(-((x - y) ** 2) / (4.0 * t)) * scaled


def semigroup_law_defect(decomp: SpectralDecomp, s: float, t: float) -> float:
    """max |(p_t o p_s) - p_{t+s}|, relative to max |p_{t+s}|."""
    joint = heat_kernel(decomp, s + t)
    composed = decomp.compose(heat_kernel(decomp, t), heat_kernel(decomp, s))
    return float(np.abs(composed - joint).max() / np.abs(joint).max())


def _bump(x: np.ndarray, center: float, width: float) -> np.ndarray:
    u = (x - center) / width
    out = np.zeros_like(x)
    inside = np.abs(u) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - u[inside] ** 2))
    return out


def compact_bump(grid: Grid) -> np.ndarray:
    """Smooth function supported in [center - width, center + width]."""
    spec = TEST_FUNCTIONS["bump"]
    return _bump(grid.nodes, spec["center"], spec["width"])


def standard_suite(grid: Grid, sigma: float) -> Dict[str, np.ndarray]:
    """
    The fixed suite: nine Gaussians, the tent, x e^{-x}, x^sigma e^{-x} and
    the compact bump, in a stable order.
    """
    x = grid.nodes
    suite: Dict[str, np.ndarray] = {}
    for center in TEST_FUNCTIONS["gaussian_centers"]:
        for width in TEST_FUNCTIONS["gaussian_widths"]:
            suite[f"gaussian_{center:g}_{width:g}"] = np.exp(-((x - center) ** 2) / (2.0 * width**2))
    tent = TEST_FUNCTIONS["tent"]
    suite["tent"] = np.maximum(0.0, 1.0 - np.abs(x - tent["center"]) / tent["half_width"])
    suite["x_exp"] = x * np.exp(-x)
    suite["boundary"] = x**sigma * np.exp(-x)
    suite["bump"] = compact_bump(grid)
    return suite


def random_suite(
    decomp: SpectralDecomp, size: int = ANALYSIS["random_suite_size"], seed: int = ANALYSIS["seed"]
) -> Dict[str, np.ndarray]:
    """Random spectral mixtures with coefficients decaying like 1/mu, unit L^2 norm."""
    rng = np.random.default_rng(seed)
    damping = 1.0 / np.maximum(decomp.eigenvalues, decomp.floor + max(decomp.mu_min, 0.0))
    suite: Dict[str, np.ndarray] = {}
    for i in range(size):
        coeffs = rng.standard_normal(decomp.eigenvalues.size) * damping
        coeffs /= np.linalg.norm(coeffs)
        suite[f"random_{i:02d}"] = decomp.synthesize(coeffs)
    return suite


def _suite_items(suite: Mapping[str, np.ndarray]) -> List[Tuple[int, str, np.ndarray]]:
    if not suite:
        raise InputError("test-function suite is empty")
    return [(i, name, np.asarray(f, dtype=float)) for i, (name, f) in enumerate(suite.items())]


def semigroup_decay_report(
    decomp: SpectralDecomp,
    gamma_: float,
    p: float,
    suite: Mapping[str, np.ndarray],
    times: Optional[Sequence[float]] = None,
) -> RatioReport:
    """
    sup over dyadic t and the suite of t^gamma ||L^gamma e^{-tL} f||_p / ||f||_p.

    Locations are (suite index, p, t). The metric ``difference_constant`` is
    the fitted C of ||L^{-gamma}(e^{-tL} - e^{-sL}) f||_p <= C (t^gamma - s^gamma) ||f||_p
    over consecutive dyadic pairs s < t.
    """
    if not 0.0 < gamma_ <= 1.0:
        raise DomainError(f"gamma must lie in (0, 1], got {gamma_!r}")
    grid = decomp.grid
    times = tuple(times) if times is not None else dyadic_times(grid, decomp.params.alpha)
    mu = decomp.nonnegative()
    items = _suite_items(suite)

    ratios, where = [], []
    for t in times:
        values = (t * mu) ** gamma_ * np.exp(-t * mu)
        for i, _, f in items:
            ratios.append(grid.lp_norm(decomp.apply(values, f), p) / grid.lp_norm(f, p))
            where.append((i, p, t))

    difference = []
    if decomp.mu_min > decomp.floor:
        inverse = power_values(decomp, -gamma_)
        for s, t in zip(times[:-1], times[1:]):
            values = inverse * (np.exp(-t * decomp.eigenvalues) - np.exp(-s * decomp.eigenvalues))
            for _, _, f in items:
                lhs = grid.lp_norm(decomp.apply(values, f), p)
                difference.append(lhs / ((t**gamma_ - s**gamma_) * grid.lp_norm(f, p)))

    locations = [np.array([w[k] for w in where]) for k in range(3)]
    return RatioReport.from_ratios(
        np.array(ratios),
        locations,
        name="semigroup_decay",
        sweep={"gamma": gamma_, "p": p, "t_min": min(times), "t_max": max(times), "suite_size": len(items)},
        metrics={"difference_constant": max(difference) if difference else None},
    )


def smoothing_report(
    decomp: SpectralDecomp,
    p: float,
    q: float,
    suite: Mapping[str, np.ndarray],
    times: Optional[Sequence[float]] = None,
) -> RatioReport:
    """Fitted C in ||e^{-tL} f||_q <= C t^{-(1/p - 1/q)/alpha} ||f||_p, 1 <= p <= q."""
    if not 1.0 <= p <= q:
        raise DomainError(f"smoothing needs 1 <= p <= q, got p={p!r}, q={q!r}")
    grid = decomp.grid
    alpha = decomp.params.alpha
    times = tuple(times) if times is not None else dyadic_times(grid, alpha)
    items = _suite_items(suite)
    exponent = (1.0 / p - (0.0 if math.isinf(q) else 1.0 / q)) / alpha

    ratios, where = [], []
    for t in times:
        values = np.exp(-t * decomp.eigenvalues)
        for i, _, f in items:
            ratios.append(t**exponent * grid.lp_norm(decomp.apply(values, f), q) / grid.lp_norm(f, p))
            where.append((i, q, t))
    locations = [np.array([w[k] for w in where]) for k in range(3)]
    return RatioReport.from_ratios(
        np.array(ratios), locations, name="smoothing", sweep={"p": p, "q": q, "times": list(times)}
    )


def domain_report(decomp: SpectralDecomp, s: float, p: float, f: Optional[np.ndarray] = None) -> float:
    """||L^{s/2} f||_p for a compactly supported bump (default) or the given f."""
    f = compact_bump(decomp.grid) if f is None else f
    return decomp.grid.lp_norm(frac_power(decomp, s, "+").apply(f), p)


def _trend(
    name: str, parameters: List[float], values: List[float], target: float, trusted_until: Optional[float]
) -> TrendReport:
    jitter = 1e-9 * max(values[0], 1.0) if values else 0.0
    monotone = all(b <= a + jitter for a, b in zip(values, values[1:]))
    reached = bool(values) and values[-1] <= target
    if not monotone:
        logger.warning_event("non_monotone_trend", f"{name} is not monotone", values=values)
    return TrendReport(
        name=name,
        parameters=parameters,
        values=values,
        target=target,
        reached_target=reached,
        monotone=monotone,
        trusted_until=trusted_until,
        status=STATUS["pass"] if monotone and reached else STATUS["fail"],
    )


def reproducing_check(
    decomp: SpectralDecomp, p: float, f: np.ndarray, tolerance: float = 1e-3, max_steps: int = 60
) -> Tuple[TrendReport, TrendReport]:
    """
    ||(I - e^{-tL}) f||_p over t = 2^{-j} and ||e^{-tL} f||_p over t = 2^j,
    both relative to ||f||_p, until they fall below ``tolerance``.
    """
    grid = decomp.grid
    norm = grid.lp_norm(f, p)
    if norm == 0.0:
        raise InputError("reproducing_check needs a nonzero function")
    mu = decomp.eigenvalues

    small_t, small = [], []
    for j in range(max_steps + 1):
        t = 2.0**-j
        small_t.append(t)
        small.append(grid.lp_norm(decomp.apply(-np.expm1(-t * mu), f), p) / norm)
        if small[-1] <= tolerance:
            break

    large_t, large = [], []
    for j in range(max_steps + 1):
        t = 2.0**j
        large_t.append(t)
        large.append(grid.lp_norm(decomp.apply(np.exp(-t * mu), f), p) / norm)
        if large[-1] <= tolerance:
            break

    _, t_hi = trusted_window(grid, decomp.params.alpha)
    return (
        _trend("reproducing_small_time", small_t, small, tolerance, None),
        _trend("reproducing_large_time", large_t, large, tolerance, t_hi),
    )
