"""
Tunable constants for hardyops: tolerances, trusted windows, suites and claims.
Every numerical threshold used by more than one module lives here.
"""

# Coupling-map root finding
COUPLING = {
    "residual_tol": 1e-11,
    "admissibility_slack": 1e-12,
    "max_iter": 200,
    "critical_tol": 1e-12,
}

# Grid construction and assembly audits
GRID = {
    "min_nodes": 8,
    "default_n": 400,
    "default_x_max": 40.0,
    # boundary layer used whenever singular weights x^{-alpha s/2} are involved
    "graded_ratio": 1.05,
    "graded_layer": 1.0,
}

ASSEMBLY = {
    "symmetry_tol": 1e-6,
    "positivity_tol": 1e-8,
    "critical_positivity_tol": 1e-6,
    "psd_tol": 1e-9,
}

# Spectral calculus
SPECTRAL = {
    "residual_tol": 1e-9,
    "orthonormality_tol": 1e-10,
    "floor": 1e-12,
    "sector_margin": 1e-6,
}

# kernels are trusted for t^{1/alpha} in [low * h_min, x_max / high]
TRUSTED_WINDOW = {
    "low": 3.0,
    "high": 8.0,
    "interior_fraction": 0.8,
}

ENVELOPE = {
    "epsilon": 0.1,
    "gaussian_rate": 4.0,
    "far_upper_rate": 8.0,
    "far_lower_rate": 2.0,
    "alpha_one_epsilon": 0.05,
    "drift_two_sided": 0.10,
    "drift_upper": 0.15,
    "max_bracket_spread": 50.0,
    # upper-only sweeps skip kernel entries below this fraction of the largest one
    "noise_floor": 1e-10,
    # ratios at or above this are treated as overflow
    "ratio_ceiling": 1e100,
}

QUADRATURE = {
    "points_per_decade": 40,
    "t_min_factor": 0.01,
    "t_max_factor": 100.0,
    # default covering is wider than the minimal coverage rule
    "default_t_min_factor": 1e-3,
    "default_t_max_factor": 200.0,
    "scalar_abs_tol": 1e-10,
    "scalar_rel_tol": 1e-10,
}

ANALYSIS = {
    "drift": 0.10,
    "schur_drift": 0.15,
    "divergence_growth": 1.25,
    "random_suite_size": 32,
    "seed": 20240917,
}

# Fixed test-function suite; "version" is recorded in every report
TEST_FUNCTIONS = {
    "version": 1,
    "gaussian_centers": (2.0, 5.0, 10.0),
    "gaussian_widths": (0.5, 1.0, 2.0),
    "tent": {"center": 5.0, "half_width": 2.0},
    "bump": {"center": 5.0, "width": 1.0},
}

SUITES = (
    "coupling",
    "spectrum",
    "heat-oracle",
    "envelopes",
    "ptk",
    "complex",
    "difference",
    "squarefn",
    "reversed-hardy",
    "gen-hardy",
    "equivalence",
    "riesz-transform",
    "schur",
)

EXIT_CODES = {
    "ok": 0,
    "failure": 1,
    "admissibility": 2,
    "usage": 64,
}

STATUS = {
    "pass": "PASS",
    "fail": "FAIL",
    "inconclusive": "INCONCLUSIVE",
    "divergence": "EXPECTED-DIVERGENCE",
    "empty": "EMPTY-REGION",
}

# Statement each verification check is about; written into the JSON reports
CLAIMS = {
    "coupling": "sigma(lambda) inverts the coupling map on its increasing branch; lambda_star = C((alpha-1)/2)",
    "spectrum": "discrete Hardy operator is nonnegative above the critical coupling; Dirichlet eigenvalues k^2",
    "heat-oracle": "discrete heat kernel matches the images and Bessel closed forms",
    "envelopes": "heat kernel is comparable to the boundary-weighted envelope",
    "ptk": "kernels of (tL)^k e^{-tL} are dominated by the relaxed polynomial envelope",
    "complex": "complex-time heat kernels are dominated in the sector |arg z| <= pi/4",
    "difference": "heat-kernel differences are dominated by the L plus M envelopes",
    "squarefn": "square functions are bounded above and below on L^p",
    "reversed-hardy": "difference square function is bounded by the weighted L^p norm",
    "gen-hardy": "x^{-alpha s/2} L^{-s/2} is bounded on L^p exactly in the admissible range",
    "equivalence": "Sobolev norms of L_0 and L_lambda are equivalent in the admissible range",
    "riesz-transform": "L_0^{s/2} L_lambda^{-s/2} is bounded on L^p",
    "schur": "weighted Schur sums of the Riesz kernel and the reduced scalar integrals are finite",
    "conjecture": "heat kernel bound with sigma(lambda) for negative coupling and alpha < 2",
}

VERDICTS = {
    "supported": "SUPPORTED",
    "not_supported": "NOT-SUPPORTED",
    "inconclusive": "INCONCLUSIVE",
}

# RunConfig defaults not covered above
RUN = {
    "alpha": 2.0,
    "lambda": 2.0,
    "p_list": (1.5, 3.0),
    "format_digits": ".12g",
}
