#!/usr/bin/env python3
"""
Command-line surface of hardyops.

    cli.py sigma --alpha 2 --lambda 2
    cli.py lambda-star --alpha 1.5
    cli.py verify --suite coupling [--config run.json] [--out report.json]
    cli.py kernel --alpha 2 --lambda 2 --t 1 [--k 1] [--complex-arg 0.39] [--out kernel.csv]
    cli.py probe-conjecture --alpha 1.5 --lambda -0.05

Exit codes: 0 all checks pass, 1 a check failed, 2 coupling below lambda_star,
64 usage error. Results go to stdout (or --out), logs to stderr.
"""

import argparse
import math
import sys
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

import envelopes
import halfline
import semigroup
from coupling import AdmissibilityError, ModelParams, c_of_sigma, lambda_star, sigma_from_lambda
from defaults import ANALYSIS, CLAIMS, ENVELOPE, EXIT_CODES, GRID, RUN, SUITES, VERDICTS
from logger import get_logger
from reports import CheckResult, RatioReport, SuiteReport
from utils import HardyOpsError, InputError, ReportWriter, UsageError, config_digest, load_env
from verification import run_suite

logger = get_logger(__name__)


class RunConfig(BaseModel):
    """One verification run: model, grid, sweep, suite, output and seed."""

    model_config = ConfigDict(frozen=True, populate_by_name=True, extra="forbid")

    alpha: float = Field(RUN["alpha"], gt=0.0, le=2.0)
    lam: float = Field(RUN["lambda"], alias="lambda")
    d: int = Field(1, ge=1)
    n: int = Field(GRID["default_n"], ge=GRID["min_nodes"])
    x_max: float = Field(GRID["default_x_max"], gt=0.0)
    grading: Literal["uniform", "graded"] = "uniform"
    t_range: Optional[Tuple[float, float]] = None
    p_list: Tuple[float, ...] = RUN["p_list"]
    s_list: Optional[Tuple[float, ...]] = None
    suite: str = "all"
    out: Optional[str] = None
    format: Literal["json", "csv"] = "json"
    seed: int = ANALYSIS["seed"]
    conjecture_mode: bool = False

    @field_validator("suite")
    @classmethod
    def _known_suite(cls, value: str) -> str:
        if value != "all" and value not in SUITES:
            raise ValueError(f"unknown suite {value!r}; choose from {', '.join(SUITES)} or all")
        return value

    @field_validator("p_list")
    @classmethod
    def _exponents(cls, value: Tuple[float, ...]) -> Tuple[float, ...]:
        if any(not p > 1.0 for p in value):
            raise ValueError(f"every p must exceed 1, got {value!r}")
        return value

    @field_validator("s_list")
    @classmethod
    def _orders(cls, value: Optional[Tuple[float, ...]]) -> Optional[Tuple[float, ...]]:
        if value is not None and any(not 0.0 < s <= 2.0 for s in value):
            raise ValueError(f"every s must lie in (0, 2], got {value!r}")
        return value

    @model_validator(mode="after")
    def _check_ranges(self) -> "RunConfig":
        if self.t_range is not None and not 0.0 < self.t_range[0] < self.t_range[1]:
            raise ValueError(f"t_range must satisfy 0 < lo < hi, got {self.t_range!r}")
        if self.alpha < 2.0 and self.lam < 0.0 and not self.conjecture_mode:
            raise ValueError("alpha < 2 with lambda < 0 needs conjecture_mode: the heat-kernel bounds are conjectural")
        return self

    @property
    def graded(self) -> bool:
        return self.grading == "graded"

    @property
    def tuples(self) -> Optional[List[Tuple[float, float]]]:
        """(p, s) pairs of the norm suites when s_list is given."""
        if self.s_list is None:
            return None
        return [(p, s) for p in self.p_list for s in self.s_list]

    def model_params(self) -> ModelParams:
        """
        Raises:
            AdmissibilityError: lambda below lambda_star(alpha)
        """
        return ModelParams.from_lambda(self.alpha, self.lam, self.d)

    def digest_payload(self) -> Dict[str, Any]:
        return self.model_dump(by_alias=True, exclude={"out", "format"})


class ArgumentParser(argparse.ArgumentParser):
    """argparse with usage errors raised as UsageError instead of exiting 2."""

    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def _number(value: float) -> str:
    return format(value, RUN["format_digits"])


def _model_flags(parser: argparse.ArgumentParser, lam_required: bool = False) -> None:
    parser.add_argument("--alpha", type=float, help="order alpha in (0, 2]")
    parser.add_argument("--lambda", dest="lam", type=float, required=lam_required, help="coupling constant")
    parser.add_argument("--n", type=int, help="grid nodes")
    parser.add_argument("--x-max", dest="x_max", type=float, help="truncation point")
    parser.add_argument("--grading", choices=("uniform", "graded"))
    parser.add_argument("--conjecture-mode", dest="conjecture_mode", action="store_true", default=None)


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="hardyops", description="Numerical laboratory for half-line Hardy operators")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    sigma = commands.add_parser("sigma", help="sigma(lambda), or C(sigma) with --sigma")
    sigma.add_argument("--alpha", type=float, required=True)
    which = sigma.add_mutually_exclusive_group(required=True)
    which.add_argument("--lambda", dest="lam", type=float)
    which.add_argument("--sigma", type=float)

    star = commands.add_parser("lambda-star", help="critical coupling lambda_star(alpha)")
    star.add_argument("--alpha", type=float, required=True)

    verify = commands.add_parser("verify", help="run a named verification suite")
    verify.add_argument("--suite", default=None, help=f"one of {', '.join(SUITES)}, all")
    verify.add_argument("--config", default=None, help="JSON file mirroring RunConfig")
    verify.add_argument("--seed", type=int)
    verify.add_argument("--out", default=None)
    _model_flags(verify)

    kernel = commands.add_parser("kernel", help="dump kernel values and envelope ratios as CSV")
    kernel.add_argument("--t", type=float, required=True)
    kernel.add_argument("--k", type=int, default=0, help="0 for the heat kernel, k >= 1 for (tL)^k e^{-tL}")
    kernel.add_argument("--complex-arg", dest="complex_arg", type=float, default=0.0, help="arg z for e^{-zL}")
    kernel.add_argument("--out", default=None)
    _model_flags(kernel)

    probe = commands.add_parser("probe-conjecture", help="exploratory heat-kernel bound for alpha < 2, lambda < 0")
    probe.add_argument("--out", default=None)
    _model_flags(probe, lam_required=True)
    return parser


def _load_config(args: argparse.Namespace, **forced) -> RunConfig:
    """Config file values overridden by command-line flags."""
    data: Dict[str, Any] = {}
    path = getattr(args, "config", None)
    if path:
        writer = ReportWriter(path)
        if not writer.exists():
            raise UsageError(f"config file {path!r} does not exist")
        data = writer.load() or {}
    flags = {
        "alpha": getattr(args, "alpha", None),
        "lambda": getattr(args, "lam", None),
        "n": getattr(args, "n", None),
        "x_max": getattr(args, "x_max", None),
        "grading": getattr(args, "grading", None),
        "seed": getattr(args, "seed", None),
        "suite": getattr(args, "suite", None),
        "out": getattr(args, "out", None),
        "conjecture_mode": getattr(args, "conjecture_mode", None),
    }
    if "lam" in data:
        data["lambda"] = data.pop("lam")
    data.update({k: v for k, v in flags.items() if v is not None})
    data.update(forced)
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise UsageError(f"invalid configuration: {e}") from e


def _grid(config: RunConfig, n: int) -> halfline.Grid:
    grading = halfline.Grading.boundary_layer(config.x_max) if config.graded else None
    return halfline.make_grid(n, config.x_max, grading)


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        ReportWriter(out).write_text(text)
        logger.info(f"wrote {out}")
    else:
        sys.stdout.write(text)


def cmd_sigma(args: argparse.Namespace) -> int:
    if args.sigma is not None:
        print(f"lambda={_number(c_of_sigma(args.sigma, args.alpha, strict=True))}")
    else:
        print(f"sigma={_number(sigma_from_lambda(args.lam, args.alpha))}")
    return EXIT_CODES["ok"]


def cmd_lambda_star(args: argparse.Namespace) -> int:
    print(f"lambda_star={_number(lambda_star(args.alpha))}")
    return EXIT_CODES["ok"]


def cmd_verify(args: argparse.Namespace) -> int:
    config = _load_config(args)
    config.model_params()
    report = run_suite(config, config.suite)
    _emit(ReportWriter().write_json(report.to_payload()), config.out)
    return EXIT_CODES["ok"] if report.passed else EXIT_CODES["failure"]


def _kernel_and_envelope(
    config: RunConfig, t: float, k: int, arg: float
) -> Tuple[halfline.Grid, np.ndarray, envelopes.EnvelopeSpec]:
    if k < 0:
        raise UsageError(f"--k must be >= 0, got {k!r}")
    if arg != 0.0 and k != 0:
        raise UsageError("--complex-arg applies to the heat kernel (k = 0) only")
    params = config.model_params()
    decomp = semigroup.decompose(halfline.assemble_L(_grid(config, config.n), params))
    grid = decomp.grid
    if arg != 0.0:
        kernel = np.abs(semigroup.complex_heat(decomp, t * complex(math.cos(arg), math.sin(arg))))
        return grid, kernel, envelopes.EnvelopeSpec(kind="complex_prop22", params=params)
    if k == 0:
        return grid, semigroup.heat_kernel(decomp, t), envelopes.EnvelopeSpec(kind="heat_thm21", params=params)
    kernel = semigroup.ptk_kernel(decomp, t, k)
    return grid, kernel, envelopes.EnvelopeSpec(kind="ptk_prop25", params=params, k=k)


def cmd_kernel(args: argparse.Namespace) -> int:
    """CSV rows x,y,t,kernel,envelope,ratio over interior node pairs."""
    config = _load_config(args)
    if not args.t > 0.0:
        raise UsageError(f"--t must be positive, got {args.t!r}")
    grid, kernel, spec = _kernel_and_envelope(config, args.t, args.k, args.complex_arg)
    try:
        semigroup.check_window([args.t], grid, config.alpha)
    except semigroup.SweepWindowError as e:
        logger.warning(f"kernel values are not trusted: {e}")

    idx = grid.interior()
    x = grid.nodes[idx][:, None]
    y = grid.nodes[idx][None, :]
    values = np.asarray(kernel)[np.ix_(idx, idx)]
    envelope = envelopes.eval_envelope(spec, x, y, args.t)
    xx, yy = np.broadcast_arrays(x, y)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = values / envelope
    rows = zip(xx.ravel(), yy.ravel(), np.full(values.size, args.t), values.ravel(), envelope.ravel(), ratio.ravel())
    writer = ReportWriter(config.out)
    text = writer.write_csv(("x", "y", "t", "kernel", "envelope", "ratio"), rows)
    if config.out is None:
        sys.stdout.write(text)
    return EXIT_CODES["ok"]


def _probe_report(config: RunConfig, params: ModelParams, n: int, times: Sequence[float]) -> RatioReport:
    decomp = semigroup.decompose(halfline.assemble_L(_grid(config, n), params))
    spec = envelopes.EnvelopeSpec(kind="heat_thm21", params=params)
    kernels = {t: semigroup.heat_kernel(decomp, t) for t in times}
    return envelopes.comparability_report(kernels, spec, decomp.grid, two_sided=False, name="conjectured_heat_bound")


def probe_verdict(coarse_max: float, fine_max: float, drift: Optional[float]) -> str:
    """SUPPORTED for a stable finite constant, NOT-SUPPORTED when it grows like a divergence."""
    if not (math.isfinite(coarse_max) and math.isfinite(fine_max)):
        return VERDICTS["not_supported"]
    if coarse_max > 0.0 and fine_max / coarse_max >= ANALYSIS["divergence_growth"]:
        return VERDICTS["not_supported"]
    if drift is not None and drift <= ENVELOPE["drift_upper"]:
        return VERDICTS["supported"]
    return VERDICTS["inconclusive"]


def cmd_probe_conjecture(args: argparse.Namespace) -> int:
    if args.alpha is None or not args.alpha < 2.0:
        raise UsageError("probe-conjecture needs --alpha < 2")
    lam_star = lambda_star(args.alpha)
    if args.lam < lam_star:
        raise AdmissibilityError(args.lam, args.alpha, lam_star)
    if args.lam >= 0.0:
        logger.info("lambda >= 0 is covered by the proven bounds; running the envelopes suite")
        config = _load_config(args, suite="envelopes")
        report = run_suite(config, "envelopes")
        _emit(ReportWriter().write_json(report.to_payload()), config.out)
        return EXIT_CODES["ok"] if report.passed else EXIT_CODES["failure"]

    config = _load_config(args, conjecture_mode=True, suite="envelopes")
    params = config.model_params()
    times = semigroup.dyadic_times(_grid(config, config.n), params.alpha)
    coarse = _probe_report(config, params, config.n, times)
    fine = _probe_report(config, params, 2 * config.n, times).with_refinement(coarse)
    verdict = probe_verdict(coarse.max_ratio, fine.max_ratio, fine.refinement_drift)
    logger.info(f"conjecture probe alpha={params.alpha} lambda={params.lam}: {verdict}")
    check = CheckResult(
        name="heat_kernel_bound",
        status=verdict,
        metrics={**fine.as_metrics(), "sigma": params.sigma},
        claim=CLAIMS["conjecture"],
    )
    report = SuiteReport(suite="conjecture", config_digest=config_digest(config.digest_payload()), checks=[check])
    _emit(ReportWriter().write_json(report.to_payload()), config.out)
    return EXIT_CODES["ok"]


COMMANDS = {
    "sigma": cmd_sigma,
    "lambda-star": cmd_lambda_star,
    "verify": cmd_verify,
    "kernel": cmd_kernel,
    "probe-conjecture": cmd_probe_conjecture,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    load_env()
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except AdmissibilityError as e:
        logger.error(str(e))
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CODES["admissibility"]
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_CODES["usage"]
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CODES["usage"]
    except HardyOpsError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CODES["failure"]


if __name__ == "__main__":
    sys.exit(main())
