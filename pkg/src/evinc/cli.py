"""Command-line front door: solve, check-conditions, campaign, gallery.

Exit codes: 0 success, 1 usage/config error, 2 condition-check failure,
3 solver failure, 4 property-campaign failures present. Output paths go to
stdout, diagnostics to stderr; outputs are byte-stable for a fixed config
and seed.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .errors import ConditionCheckError, ContractViolation, StepFailure, StepSizeError
from .harness import ALL_CHECKS, PropertyCampaign, run_campaign
from .materials import check_conditions, rho_zero
from .signals import weighted_norm, write_signal_csv
from .solver import lipschitz_bound, solve

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONDITIONS = 2
EXIT_SOLVER = 3
EXIT_CAMPAIGN = 4

_CONFIG_HELP = """\
config sections and keys:
  [problem]           catalog, n, dt, t0
  [grid]              t0, dt, n
  [material]          builder (constant|sinusoidal), m0, m1, amplitude,
                      frequency, c0, c1
  [relation]          kind (zero|linear|soft_threshold|ball_saturation|
                      deviatoric_saturation), weight, radius, gain, matrix
  [forcing]           kind (constant|window|impulse|random|csv), value,
                      start, stop, path, seed
  [solver]            rho, c_tilde, mode (direct|yosida_path), fp_tol,
                      fp_max_iter, lambda_start, lambda_stop, lambda_factor
  [campaign]          trials, checks, seed, fp_tol
  [thermoplasticity]  m, dx, M, C, w, kappa, c, tau0, s0
  [viscoplasticity]   m, dx, M, D, L, N, relation, parameter

Matrices use ';' between rows and ',' between entries. Coefficients are
"base[,amplitude[,frequency]]". There is no initial-condition interface: the
past is identically zero, so model initial values with impulsive forcing
(kind = impulse).
"""


def _add_common(sub):
    sub.add_argument("--config", required=True, help="path to the run configuration")
    sub.add_argument("--out", default=".", help="output directory (created if missing)")
    sub.add_argument("--seed", type=int, default=None, help="campaign seed override")
    sub.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        dest="overrides",
        help="override a config entry (repeatable)",
    )
    sub.add_argument("--mode", choices=["direct", "yosida"], default=None)
    sub.add_argument("--rho", type=float, default=None)
    sub.add_argument("--dt", type=float, default=None)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="evinc",
        description="causal solver and property harness for evolutionary inclusions",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    for name, descr in (
        ("solve", "solve a configured problem, write solution.csv and report.txt"),
        ("check-conditions", "verify the structural conditions of the material"),
        ("campaign", "run randomized property checks, write campaign.csv"),
        ("gallery", "assemble a slab model and write its structural summary"),
    ):
        sub = subs.add_parser(
            name,
            help=descr,
            description=descr,
            epilog=_CONFIG_HELP,
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
        _add_common(sub)
    return parser


def _effective_overrides(args):
    overrides = list(args.overrides)
    if args.mode is not None:
        mode = "yosida_path" if args.mode == "yosida" else args.mode
        overrides.append(f"solver.mode={mode}")
    if args.rho is not None:
        overrides.append(f"solver.rho={args.rho}")
    if args.dt is not None:
        overrides.append(f"grid.dt={args.dt}")
    if args.seed is not None:
        overrides.append(f"campaign.seed={args.seed}")
    return overrides


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write(path: Path, text: str):
    path.write_text(text)
    print(path)


def _cmd_solve(cfg, out: Path) -> int:
    problem = cfg.build_problem()
    report = solve(problem)
    if not report.converged:
        print(f"solver failed at step {report.fail_step}: {report.fail_reason}",
              file=sys.stderr)
        return EXIT_SOLVER
    write_signal_csv(report.solution, out / "solution.csv")
    print(out / "solution.csv")
    sol_norm = weighted_norm(report.solution)
    f_norm = weighted_norm(problem.forcing)
    bound = lipschitz_bound(problem)
    lines = [
        "status = converged",
        f"mode = {problem.mode}",
        f"rho = {problem.rho:.17g}",
        f"c_tilde = {problem.c_tilde:.17g}",
        f"dt = {problem.forcing.grid.dt:.17g}",
        f"n = {problem.forcing.grid.n}",
        f"max_residual = {report.max_residual:.17g}",
        f"max_step_iterations = {max(report.per_step_iterations)}",
        f"solution_weighted_norm = {sol_norm:.17g}",
        f"forcing_weighted_norm = {f_norm:.17g}",
        # the zero pair is admissible, so |u|/|f| certifies the gain bound
        f"anchor_gain = {(sol_norm / f_norm if f_norm else 0.0):.17g}",
        f"anchor_gain_bound = {bound:.17g}",
    ]
    if report.lambda_trace:
        lines.append(f"lambda_stages = {len(report.lambda_trace)}")
        lines.append(f"lambda_min = {report.lambda_trace[-1][0]:.17g}")
        lines.append(f"yosida_sup_norm = {report.yosida_sup_norm:.17g}")
        lines.append(f"delta = {report.delta:.17g}")
        lines.append(f"yosida_reference_bound = {report.yosida_reference_bound:.17g}")
    _write(out / "report.txt", "\n".join(lines) + "\n")
    return EXIT_OK


def _conditions_report(cfg):
    import numpy as np

    template = cfg.build_template()
    grid = template.grid
    ts = np.linspace(grid.t0, grid.t0 + grid.horizon, 33)
    return template, check_conditions(template.family, ts)


def _cmd_check_conditions(cfg, out: Path) -> int:
    template, report = _conditions_report(cfg)
    rho0 = None
    if report.passed:
        rho0 = rho_zero(template.family, template.c_tilde)
    text = report.to_text()
    if rho0 is not None:
        text += f"\nrho_zero = {rho0:.17g}\nc_tilde = {template.c_tilde:.17g}"
    _write(out / "report.txt", text + "\n")
    if not report.passed:
        print(f"conditions failed: {report.failing()}", file=sys.stderr)
        return EXIT_CONDITIONS
    return EXIT_OK


def _cmd_campaign(cfg, out: Path) -> int:
    template, cond = _conditions_report(cfg)
    if not cond.passed:
        print(f"conditions failed: {cond.failing()}", file=sys.stderr)
        _write(out / "report.txt", cond.to_text() + "\n")
        return EXIT_CONDITIONS
    sec = cfg.sections.get("campaign", {})
    trials = int(sec.get("trials", 20))
    seed = int(sec.get("seed", 0))
    checks = tuple(
        c.strip() for c in sec.get("checks", "").split(",") if c.strip()
    )
    if not checks:
        checks = tuple(
            c for c in ALL_CHECKS if c != "oracle_match" or template.oracle_capable
        )
    campaign = PropertyCampaign(
        template=template, trials=trials, seed=seed, checks=checks,
        fp_tol=float(sec.get("fp_tol", 1e-10)),
    )
    report = run_campaign(campaign)
    (out / "campaign.csv").write_text(report.to_csv())
    print(out / "campaign.csv")
    _write(out / "report.txt", report.to_text() + "\n")
    if not report.passed:
        print(f"{len(report.failures)} failing trial checks", file=sys.stderr)
        return EXIT_CAMPAIGN
    return EXIT_OK


def _cmd_gallery(cfg, out: Path) -> int:
    model = cfg.build_gallery_model()
    _write(out / "report.txt", model.summary() + "\n")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        cfg = load_config(args.config, overrides=_effective_overrides(args))
        out = _out_dir(args)
        if args.command == "solve":
            return _cmd_solve(cfg, out)
        if args.command == "check-conditions":
            return _cmd_check_conditions(cfg, out)
        if args.command == "campaign":
            return _cmd_campaign(cfg, out)
        if args.command == "gallery":
            return _cmd_gallery(cfg, out)
        parser.error(f"unknown command {args.command!r}")
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConditionCheckError as exc:
        print(f"condition check failed: {exc}", file=sys.stderr)
        return EXIT_CONDITIONS
    except (StepFailure, StepSizeError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ContractViolation as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def console_entry():
    raise SystemExit(main())


if __name__ == "__main__":
    console_entry()
