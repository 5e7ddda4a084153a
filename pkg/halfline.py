"""
Half-line grids and discrete Hardy operators.

Conventions:
- Grid functions are sampled at cell midpoints; ``weights`` are cell widths.
- Operators are stored in form convention: A is the energy matrix, the
  operator matrix is W^{-1} A, and a matrix M acting as
  (M f)_i = sum_j K(x_i, x_j) w_j f_j has kernel values K_ij = M_ij / w_j.
- Functions are extended by zero beyond x_max.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import integrate, linalg

from coupling import AdmissibilityError, ModelParams, lambda_star
from defaults import ASSEMBLY, COUPLING, GRID, TRUSTED_WINDOW
from logger import event_logger
from specfun import gamma
from utils import DomainError, InputError, NumericalError, QuadratureError

logger = event_logger(__name__)


class InstabilityError(NumericalError):
    """Assembled operator is too far from symmetric to be trusted."""


class GridError(InputError):
    """Invalid grid request."""


class Grading(BaseModel):
    """Grid grading: uniform, or a geometric boundary layer refining toward 0."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["uniform", "geometric"] = "uniform"
    ratio: float = Field(GRID["graded_ratio"], gt=1.0, le=2.0)
    boundary_fraction: float = Field(0.025, gt=0.0, lt=1.0)

    @classmethod
    def uniform(cls) -> "Grading":
        return cls(kind="uniform")

    @classmethod
    def geometric(cls, ratio: float, boundary_fraction: float) -> "Grading":
        return cls(kind="geometric", ratio=ratio, boundary_fraction=boundary_fraction)

    @classmethod
    def boundary_layer(cls, x_max: float) -> "Grading":
        """Default layer covering [0, 1] with ratio 1.05."""
        return cls.geometric(GRID["graded_ratio"], min(GRID["graded_layer"] / x_max, 0.5))


@dataclass(frozen=True, eq=False)
class Grid:
    nodes: np.ndarray
    weights: np.ndarray
    edges: np.ndarray
    x_max: float
    grading: Grading

    @property
    def n(self) -> int:
        return int(self.nodes.size)

    @property
    def h_min(self) -> float:
        return float(self.weights.min())

    @property
    def graded(self) -> bool:
        return self.grading.kind != "uniform"

    def inner(self, f: np.ndarray, g: np.ndarray) -> float:
        return float(np.sum(self.weights * f * g))

    def lp_norm(self, f: np.ndarray, p: float) -> float:
        """(sum_i w_i |f_i|^p)^{1/p}; p = inf gives max |f_i|."""
        if p < 1.0:
            raise DomainError(f"lp_norm needs p >= 1, got {p!r}")
        a = np.abs(np.asarray(f))
        if math.isinf(p):
            return float(a.max(initial=0.0))
        # scale first so large entries do not overflow in a**p
        top = float(a.max(initial=0.0))
        if top == 0.0:
            return 0.0
        return top * float(np.sum(self.weights * (a / top) ** p)) ** (1.0 / p)

    def interior(self, fraction: float = TRUSTED_WINDOW["interior_fraction"]) -> np.ndarray:
        """Indices of nodes away from the truncation end (x <= fraction * x_max)."""
        return np.flatnonzero(self.nodes <= fraction * self.x_max)

    def same_as(self, other: "Grid") -> bool:
        return self.n == other.n and np.array_equal(self.nodes, other.nodes) and np.array_equal(self.weights, other.weights)

    def describe(self) -> Dict[str, object]:
        return {"n": self.n, "x_max": self.x_max, "grading": self.grading.model_dump()}


def _geometric_edges(n: int, x_max: float, grading: Grading) -> np.ndarray:
    r = grading.ratio
    layer = grading.boundary_fraction * x_max
    best = None
    for m in range(1, n):
        h = (x_max - layer) / (n - m)
        c = layer * (r - 1.0) / (r ** m - 1.0)
        mismatch = abs(math.log(c * r ** (m - 1) / h))
        if best is None or mismatch < best[0]:
            best = (mismatch, m, c, h)
    _, m, c, h = best
    widths = np.concatenate([c * r ** np.arange(m), np.full(n - m, h)])
    edges = np.concatenate([[0.0], np.cumsum(widths)])
    edges[-1] = x_max
    return edges


def make_grid(n: int, x_max: float, grading: Optional[Grading] = None) -> Grid:
    """
    Midpoint grid on (0, x_max].

    Uniform: x_i = (i - 1/2) h with weights h = x_max / n. Geometric: a layer of
    cells growing by ``ratio`` away from 0 over boundary_fraction * x_max,
    matched to uniform cells on the rest.
    """
    grading = grading or Grading.uniform()
    if n < GRID["min_nodes"]:
        raise GridError(f"n must be at least {GRID['min_nodes']}, got {n!r}")
    if not x_max > 0.0:
        raise GridError(f"x_max must be positive, got {x_max!r}")

    if grading.kind == "uniform":
        edges = np.linspace(0.0, x_max, n + 1)
    else:
        edges = _geometric_edges(n, x_max, grading)
    weights = np.diff(edges)
    nodes = 0.5 * (edges[:-1] + edges[1:])
    return Grid(nodes=nodes, weights=weights, edges=edges, x_max=float(x_max), grading=grading)


def refine(grid: Grid) -> Grid:
    """Same domain and grading with twice the nodes."""
    return make_grid(2 * grid.n, grid.x_max, grid.grading)


@dataclass(frozen=True, eq=False)
class OperatorAssembly:
    form: np.ndarray
    mass: np.ndarray
    params: ModelParams
    grid: Grid
    symmetrization_defect: float
    kinetic: str
    audit: Dict[str, float] = field(default_factory=dict)

    @property
    def operator(self) -> np.ndarray:
        """W^{-1} A: the operator matrix acting on grid functions."""
        return self.form / self.mass[:, None]

    def apply(self, f: np.ndarray) -> np.ndarray:
        return (self.form @ f) / self.mass


def _symmetrized(form: np.ndarray) -> Tuple[np.ndarray, float]:
    scale = float(np.abs(form).max())
    defect = float(np.abs(form - form.T).max()) / scale if scale > 0.0 else 0.0
    return 0.5 * (form + form.T), defect


def assemble_laplacian_dirichlet(grid: Grid) -> OperatorAssembly:
    """
    Three-point Dirichlet Laplacian, zero at 0 and at x_max.

    Form sum_k (u_{k+1} - u_k)^2 / gap_k over consecutive points of
    0, x_1, ..., x_n, x_max.
    """
    points = np.concatenate([[0.0], grid.nodes, [grid.x_max]])
    inv_gap = 1.0 / np.diff(points)
    form = np.diag(inv_gap[:-1] + inv_gap[1:])
    off = -inv_gap[1:-1]
    form += np.diag(off, 1) + np.diag(off, -1)
    form, defect = _symmetrized(form)
    return OperatorAssembly(
        form=form,
        mass=grid.weights.copy(),
        params=ModelParams.from_lambda(2.0, 0.0),
        grid=grid,
        symmetrization_defect=defect,
        kinetic="dirichlet",
    )


def regional_constant(alpha: float) -> float:
    """c_{1,alpha} = alpha Gamma((1+alpha)/2) / (2^{2-alpha} sqrt(pi) Gamma(1-alpha/2))."""
    return alpha * gamma((1.0 + alpha) / 2.0) / (2.0 ** (2.0 - alpha) * math.sqrt(math.pi) * gamma(1.0 - alpha / 2.0))


def _own_cell_coefficients(grid: Grid, alpha: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Principal value over each node's own cell of the local quadratic through
    the neighbouring nodes. Odd reflection (u = 0 at 0 and at x_max) supplies
    the missing neighbour of the first and last node.

    Returns the coefficients multiplying u_{i-1}, u_i, u_{i+1}.
    """
    x, e, big_x = grid.nodes, grid.edges, grid.x_max
    h_minus = x - e[:-1]
    h_plus = e[1:] - x
    d_minus = np.empty_like(x)
    d_plus = np.empty_like(x)
    d_minus[1:] = np.diff(x)
    d_minus[0] = 2.0 * x[0]
    d_plus[:-1] = np.diff(x)
    d_plus[-1] = 2.0 * (big_x - x[-1])

    if abs(alpha - 1.0) < 1e-12:
        pv_odd = np.log(h_plus / h_minus)
    else:
        pv_odd = (h_plus ** (1.0 - alpha) - h_minus ** (1.0 - alpha)) / (1.0 - alpha)
    even = (h_plus ** (2.0 - alpha) + h_minus ** (2.0 - alpha)) / (2.0 - alpha)

    den = d_plus * d_minus * (d_plus + d_minus)
    # u(y) - u_i = a r + b r^2, contribution -(a * pv_odd + b * even)
    left = -(-pv_odd * d_plus ** 2 + even * d_plus) / den
    centre = -(pv_odd * (d_plus ** 2 - d_minus ** 2) - even * (d_plus + d_minus)) / den
    right = -(pv_odd * d_minus ** 2 + even * d_minus) / den

    # ghost values are -u_0 and -u_{n-1}
    centre[0] -= left[0]
    left[0] = 0.0
    centre[-1] -= right[-1]
    right[-1] = 0.0
    return left, centre, right


def assemble_regional_fractional(grid: Grid, alpha: float) -> OperatorAssembly:
    """
    Collocation of the regional fractional Laplacian on (0, x_max].

    Row i integrates the kernel exactly over every other cell against the
    nodal value, takes the principal value over its own cell against the local
    quadratic interpolant, and adds the tail u_i c (x_max - x_i)^{-alpha}/alpha.

    The weighted couplings w_i C_ij are averaged with w_j C_ji and the diagonal
    is rebuilt from the collocation row sums, so the form is symmetric and
    acts on constants exactly as the collocation does. On uniform grids the
    averaging changes nothing; on graded grids the collocation asymmetry it
    removes is recorded in ``audit["collocation_asymmetry"]``.

    Raises:
        InstabilityError: the assembled form deviates from symmetry by more
            than 1e-6 relative
    """
    if not 0.0 < alpha < 2.0:
        raise DomainError(f"regional assembly needs alpha in (0, 2), got {alpha!r}")
    c = regional_constant(alpha)
    x, e, big_x = grid.nodes, grid.edges, grid.x_max

    offsets = e[None, :] - x[:, None]
    antiderivative = -np.sign(offsets) * np.abs(offsets) ** (-alpha) / alpha
    cell_integrals = antiderivative[:, 1:] - antiderivative[:, :-1]
    np.fill_diagonal(cell_integrals, 0.0)

    operator = -c * cell_integrals
    tail = (big_x - x) ** (-alpha) / alpha
    left, centre, right = _own_cell_coefficients(grid, alpha)
    diagonal = c * (cell_integrals.sum(axis=1) + tail + centre)
    operator[np.diag_indices_from(operator)] = diagonal
    idx = np.arange(grid.n - 1)
    operator[idx + 1, idx] += c * left[1:]
    operator[idx, idx + 1] += c * right[:-1]

    collocation = grid.weights[:, None] * operator
    scale = float(np.abs(collocation).max())
    asymmetry = float(np.abs(collocation - collocation.T).max()) / scale if scale > 0.0 else 0.0

    form = 0.5 * (collocation + collocation.T)
    np.fill_diagonal(form, 0.0)
    form[np.diag_indices_from(form)] = grid.weights * operator.sum(axis=1) - form.sum(axis=1)
    form, defect = _symmetrized(form)
    if not np.all(np.isfinite(form)):
        defect = math.inf
    logger.info_event(
        "regional_assembly",
        f"regional assembly alpha={alpha} n={grid.n}",
        defect=defect,
        collocation_asymmetry=asymmetry,
    )
    if defect > ASSEMBLY["symmetry_tol"]:
        raise InstabilityError(f"symmetrization defect {defect:.3e} exceeds {ASSEMBLY['symmetry_tol']:.1e}")

    return OperatorAssembly(
        form=form,
        mass=grid.weights.copy(),
        params=ModelParams.from_lambda(alpha, 0.0),
        grid=grid,
        symmetrization_defect=defect,
        kinetic="regional",
        audit={"collocation_asymmetry": asymmetry},
    )


def assemble_hardy_potential(grid: Grid, lam: float, alpha: float) -> np.ndarray:
    """Diagonal lambda x_i^{-alpha}."""
    return lam * grid.nodes ** (-alpha)


def generalized_spectrum(form: np.ndarray, mass: np.ndarray) -> np.ndarray:
    """Eigenvalues of A v = mu W v, ascending."""
    scale = 1.0 / np.sqrt(mass)
    return linalg.eigvalsh(scale[:, None] * form * scale[None, :])


def assemble_L(grid: Grid, params: ModelParams) -> OperatorAssembly:
    """
    A_L = A_kinetic + W diag(lambda x^{-alpha}) with the Hardy positivity audit.

    Raises:
        AdmissibilityError: lambda < lambda_star(alpha)
    """
    lam_star = lambda_star(params.alpha)
    if params.lam < lam_star - COUPLING["admissibility_slack"]:
        raise AdmissibilityError(params.lam, params.alpha, lam_star)

    if params.alpha == 2.0:
        kinetic = assemble_laplacian_dirichlet(grid)
    else:
        kinetic = assemble_regional_fractional(grid, params.alpha)
    potential = assemble_hardy_potential(grid, params.lam, params.alpha)
    form = kinetic.form + np.diag(grid.weights * potential)

    spectrum = generalized_spectrum(form, grid.weights)
    scale = float(np.abs(spectrum).max())
    tol = ASSEMBLY["critical_positivity_tol"] if params.critical else ASSEMBLY["positivity_tol"]
    audit = {
        "min_eigenvalue": float(spectrum[0]),
        "spectral_scale": scale,
        "positivity_ok": float(spectrum[0] >= -tol * scale),
        "critical": float(params.critical),
        "exploratory": float(params.exploratory),
        **kinetic.audit,
    }
    if params.exploratory:
        logger.warning_event(
            "exploratory_coupling",
            f"alpha={params.alpha} with lambda={params.lam} < 0: heat-kernel bounds are conjectural here",
            **audit,
        )
    if not audit["positivity_ok"]:
        logger.warning_event("positivity_audit", "discrete Hardy operator has a negative eigenvalue", **audit)

    return OperatorAssembly(
        form=form,
        mass=grid.weights.copy(),
        params=params,
        grid=grid,
        symmetrization_defect=kinetic.symmetrization_defect,
        kinetic=kinetic.kinetic,
        audit=audit,
    )


def regional_pointwise_quadrature(u: Callable[[float], float], x: float, alpha: float, x_max: float) -> float:
    """
    Adaptive-quadrature value of c PV int_0^inf (u(x) - u(y)) |x - y|^{-1-alpha} dy
    for a smooth u, extended by zero beyond x_max.
    """
    c = regional_constant(alpha)
    ux = u(x)
    near = min(x, x_max - x)

    def symmetric(r: float) -> float:
        if r == 0.0:
            return 0.0
        return (2.0 * ux - u(x - r) - u(x + r)) / (r * r)

    # weight r^{1-alpha} carries the singularity
    value, err = integrate.quad(symmetric, 0.0, near, weight="alg", wvar=(1.0 - alpha, 0.0), limit=400)
    total = value
    if x_max - x > near:
        one_sided, err2 = integrate.quad(
            lambda r: (ux - u(x + r)) * r ** (-1.0 - alpha), near, x_max - x, limit=400
        )
    else:
        one_sided, err2 = integrate.quad(lambda r: (ux - u(x - r)) * r ** (-1.0 - alpha), near, x, limit=400)
    total += one_sided
    total += ux * (x_max - x) ** (-alpha) / alpha
    if not math.isfinite(total) or err + err2 > 1e-6 * max(1.0, abs(total)):
        raise QuadratureError(f"pointwise quadrature at x={x} did not converge (error {err + err2:.2e})")
    return c * total


def form_value(u: Callable[[float], float], alpha: float, x_max: float) -> float:
    """
    (c/2) int int |u(x) - u(y)|^2 |x - y|^{-1-alpha} over (0, x_max)^2 plus the
    truncation tail c int u(x)^2 (x_max - x)^{-alpha}/alpha, by nested quadrature.
    """
    c = regional_constant(alpha)

    def inner(x: float) -> float:
        def slope_squared(r: float) -> float:
            return ((u(x + r) - u(x)) / r) ** 2 if r > 0.0 else 0.0

        value, _ = integrate.quad(slope_squared, 0.0, x_max - x, weight="alg", wvar=(1.0 - alpha, 0.0), limit=200)
        return value

    # the pair integral counts each unordered pair once here, hence no 1/2
    pairs, _ = integrate.quad(inner, 0.0, x_max, limit=200)
    tail, _ = integrate.quad(lambda x: u(x) ** 2 * (x_max - x) ** (-alpha) / alpha, 0.0, x_max, limit=200)
    return c * (pairs + tail)
