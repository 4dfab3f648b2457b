"""Command-line front end.

Exit codes:
  0  success
  1  validation failure (some invariant check failed)
  2  configuration error (malformed file, unknown or missing key, bad value)
  3  infeasible scenario, or fewer than 90% of sweep rows feasible
  4  convergence or calibration failure
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import report
from ._accel import BACKEND
from .config import ConfigError, RunConfig, dump_config, load_config
from .errors import CalibrationFailure, ConvergenceFailure, DomainError, InfeasibleScenario, NoEquilibrium
from .expectation import price_schedule, solve_gamma, solve_gamma_multistart, solve_gamma_naive
from .metrics import compute_metrics
from .sweep import GridConfig, SweepSpec, calibrate_w, default_alpha_range, run_sweep
from .validate import report as validation_report
from .validate import run_checks

log = logging.getLogger("agrifin")

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_CONVERGENCE = 4
FEASIBLE_SHARE = 0.9
FIG1_ALPHA = 0.4


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML run configuration")
    common.add_argument("--out", type=Path, help="output directory (overrides [output] directory)")
    common.add_argument("--alpha", type=float, help="market integration level")
    common.add_argument("--mode", choices=("rational", "naive", "both"), help="farmer expectation mode")
    common.add_argument("--grid-points", type=int, help="aggregate quadrature nodes (default 133)")
    common.add_argument("--truncation", type=float, help="grid half-width in aggregate std units (default 4)")
    common.add_argument("--tol", type=float, help="outer and inner tolerance (default 1e-7)")
    common.add_argument("--threads", help="sweep worker threads: integer or 'auto'")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(
        prog="agrifin",
        description="Equilibrium solver for a commodity market with a partially integrated financial investor.",
        epilog="exit codes: 0 ok, 1 validation failure, 2 config error, 3 infeasible / sweep mostly infeasible, 4 convergence or calibration failure",
    )
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="solve one scenario")
    sub.add_parser("sweep", parents=[common], help="comparative statics over one parameter")
    fig = sub.add_parser("figure", parents=[common], help="emit figure data tables")
    fig.add_argument("figure_id", choices=[str(i) for i in range(1, 7)])
    sub.add_parser("validate", parents=[common], help="run the invariant checks")
    sub.add_parser("calibrate-market-b", parents=[common], help="calibrate the low-default comparison market")
    return p


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    try:
        if args.alpha is not None:
            cfg = replace(cfg, scenario=cfg.scenario.with_(alpha=args.alpha))
    except DomainError as exc:
        raise ConfigError(f"--alpha: {exc}") from exc
    solver = cfg.solver
    if args.grid_points is not None:
        if args.grid_points < 3:
            raise ConfigError("--grid-points must be >= 3")
        solver = replace(solver, n_points=args.grid_points)
    if args.truncation is not None:
        if not args.truncation > 0:
            raise ConfigError("--truncation must be > 0")
        solver = replace(solver, truncation=args.truncation)
    if args.tol is not None:
        if not args.tol > 0:
            raise ConfigError("--tol must be > 0")
        solver = replace(solver, tol=args.tol, inner_tol=args.tol)
    sweep = cfg.sweep
    if args.mode is not None:
        sweep = replace(sweep, mode=args.mode)
    if args.threads is not None:
        if args.threads != "auto" and not (args.threads.isdigit() and int(args.threads) >= 1):
            raise ConfigError(f"--threads must be a positive integer or 'auto', got {args.threads!r}")
        sweep = replace(sweep, threads=args.threads)
    output = cfg.output
    if args.out is not None:
        output = replace(output, directory=str(args.out))
    return replace(cfg, solver=solver, sweep=sweep, output=output)


def grid_config(cfg: RunConfig) -> GridConfig:
    s = cfg.solver
    return GridConfig(s.n_points, s.truncation, s.tol, s.inner_tol, s.guess)


def _threads(cfg):
    return cfg.sweep.threads if cfg.sweep.threads == "auto" else int(cfg.sweep.threads)


def sweep_spec(cfg: RunConfig, params=None, mode=None) -> SweepSpec:
    sw = cfg.sweep
    params = cfg.scenario if params is None else params
    gc = grid_config(cfg)
    if sw.values:
        values = tuple(sw.values)
    elif sw.parameter == "alpha" and sw.auto_range:
        lo, hi = default_alpha_range(params, gc, sw.alpha_cap)
        values = tuple(np.linspace(lo, hi, sw.num))
    else:
        values = tuple(np.linspace(sw.start, sw.stop, sw.num))
    return SweepSpec(params, sw.parameter, values, mode or sw.mode, gc)


class Outputs:
    """Buffers files and writes them in one pass after all computation."""

    def __init__(self, cfg: RunConfig):
        self.dir = Path(cfg.output.directory)
        self.formats = set(cfg.output.formats)
        self.files = {}

    def csv(self, name, table):
        if "csv" in self.formats:
            self.files[name] = report.csv_text(*table)

    def json(self, name, obj):
        if "json" in self.formats:
            self.files[name] = report.json_text(obj)

    def text(self, name, text):
        self.files[name] = text

    def flush(self):
        for name, text in self.files.items():
            report.write_text(self.dir / name, text)
            log.info("wrote %s", self.dir / name)


def cmd_solve(cfg: RunConfig, out: Outputs) -> int:
    params = cfg.scenario
    gc = grid_config(cfg)
    grid = gc.grid(params)
    s = cfg.solver
    kw = dict(tol=s.tol, inner_tol=s.inner_tol, max_iter=s.max_iter, inner_maxiter=s.inner_maxiter)
    modes = ("rational", "naive") if cfg.sweep.mode == "both" else (cfg.sweep.mode,)
    summary = {}
    metrics_rows = []
    for mode in modes:
        if mode == "rational" and s.n_starts > 1:
            sol, _ = solve_gamma_multistart(params, grid, n_starts=s.n_starts, high=s.guess_high, seed=s.seed, **kw)
        elif mode == "rational":
            sol = solve_gamma(params, grid, guess=s.guess, **kw)
        else:
            sol = solve_gamma_naive(params, grid, guess=s.guess, **kw)
        m = compute_metrics(sol, params, mode)
        metrics_rows.append(m)
        out.csv(f"schedule_{mode}.csv", report.schedule_table(sol, params, mode))
        summary[mode] = report.solve_summary(sol, m, params, BACKEND)
        print(f"{mode}: gamma={sol.gamma:.10g} default_frac={m.default_frac:.4f} mu_F={m.mu_F:.5g} mu_S={m.mu_S:.5g}")
    out.csv("metrics.csv", report.metrics_table(metrics_rows))
    out.json("summary.json", summary if len(modes) > 1 else summary[modes[0]])
    return EXIT_OK


def _sweep_exit(results) -> int:
    share = min(r.feasible_fraction() for r in results)
    if share < FEASIBLE_SHARE:
        print(f"only {share:.0%} of sweep rows feasible", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, out: Outputs) -> int:
    spec = sweep_spec(cfg)
    t0 = time.perf_counter()
    res = run_sweep(spec, threads=_threads(cfg))
    log.info("sweep of %d values in %.2fs", len(spec.values), time.perf_counter() - t0)
    out.csv("sweep.csv", report.sweep_table(res))
    out.json("sweep_summary.json", report.sweep_summary(res))
    print(f"{len(spec.values)} values of {spec.swept_parameter}, feasible {res.feasible_fraction():.0%}, alpha_c={res.alpha_c}, alpha_star={res.alpha_star}")
    return _sweep_exit([res])


def _alpha_cfg(cfg):
    return replace(cfg, sweep=replace(cfg.sweep, parameter="alpha"))


def cmd_figure(cfg: RunConfig, out: Outputs, figure_id: int) -> int:
    gc = grid_config(cfg)
    params = cfg.scenario
    results = []
    if figure_id == 1:
        alpha = params.alpha if params.alpha > 0 else FIG1_ALPHA
        seg = params.with_(alpha=0.0)
        integ = params.with_(alpha=alpha)
        s0 = solve_gamma(seg, gc.grid(seg), guess=gc.guess, tol=gc.tol, inner_tol=gc.inner_tol).schedule
        try:
            sa = solve_gamma(integ, gc.grid(integ), guess=gc.guess, tol=gc.tol, inner_tol=gc.inner_tol).schedule
        except InfeasibleScenario:
            sa = price_schedule(s0.gamma, s0.grid, integ, gc.inner_tol)
        out.csv("fig1.csv", report.figure1_table(s0, sa, params.theta0))
        out.json("fig1_summary.json", {"alpha_finite": alpha, "gamma_alpha0": s0.gamma, "gamma_alpha_finite": sa.gamma})
        if not sa.feasible.all():
            return EXIT_INFEASIBLE
    elif figure_id in (2, 3, 5):
        res = run_sweep(sweep_spec(_alpha_cfg(cfg), mode="rational"), threads=_threads(cfg))
        results.append(res)
        table = {2: report.figure2_table, 3: report.figure3_table, 5: report.figure5_table}[figure_id](res)
        out.csv(f"fig{figure_id}.csv", table)
        out.json(f"fig{figure_id}_summary.json", report.sweep_summary(res))
        if figure_id == 3:
            out.csv("fig3-analytic.csv", report.figure3_analytic_table(params))
    elif figure_id == 4:
        res = run_sweep(sweep_spec(_alpha_cfg(cfg), mode="both"), threads=_threads(cfg))
        results.append(res)
        out.csv("fig4.csv", report.figure4_table(res))
        out.json("fig4_summary.json", report.sweep_summary(res))
    elif figure_id == 6:
        mb = cfg.market_b
        cal = calibrate_w(params, mb.target_default, mb.sigma_multiplier, mb.anchor_fixed_cost, mb.w_max_factor, mb.tolerance, gc)
        spec_a = sweep_spec(_alpha_cfg(cfg), mode="rational")
        spec_b = SweepSpec(cal.params, "alpha", spec_a.values, "rational", gc)
        res_a = run_sweep(spec_a, threads=_threads(cfg), refine=False)
        res_b = run_sweep(spec_b, threads=_threads(cfg), refine=False)
        results += [res_a, res_b]
        out.csv("fig6.csv", report.figure6_table(res_a, res_b))
        out.json("fig6_summary.json", {
            "market_a": cfg.scenario.to_dict(),
            "market_b": cal.params.to_dict(),
            "market_b_default_frac": cal.default_frac,
            "market_b_target": cal.target,
            "market_b_calibrated": cal.reached,
            "market_a_default_frac": res_a.series("default_frac")[0],
        })
        if not cal.reached:
            print(f"warning: market B default rate {cal.default_frac:.4f} misses target {cal.target:.4f}", file=sys.stderr)
    if cfg.output.plot_script:
        out.text("plot_figures.py", report.PLOT_SCRIPT)
    return _sweep_exit(results) if results else EXIT_OK


def cmd_validate(cfg: RunConfig, out: Outputs) -> int:
    s = cfg.solver
    checks = run_checks(cfg.scenario, grid_config(cfg), s.n_starts, s.guess_high, s.seed, cfg.sweep.num, _threads(cfg))
    rep = validation_report(checks)
    out.text("validation.json", report.json_text(rep))
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.measured:.6g} ({c.relation} {c.tolerance:g})")
    if not rep["passed"]:
        print("failed checks: " + "; ".join(c.name for c in checks if not c.passed), file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def cmd_calibrate(cfg: RunConfig, out: Outputs) -> int:
    mb = cfg.market_b
    cal = calibrate_w(cfg.scenario, mb.target_default, mb.sigma_multiplier, mb.anchor_fixed_cost, mb.w_max_factor, mb.tolerance, grid_config(cfg))
    out.json("calibration.json", {
        "params": cal.params.to_dict(),
        "default_frac": cal.default_frac,
        "target": cal.target,
        "reached": cal.reached,
        "w_bracket": list(cal.w_bracket),
        "lowest_bracket_end_default": cal.floor,
    })
    Path(cfg.output.directory).mkdir(parents=True, exist_ok=True)
    dump_config(replace(cfg, scenario=cal.params), Path(cfg.output.directory) / "market_b.toml")
    print(f"market B: w={cal.params.w:.6g} sigma_bar={cal.params.sigma_bar:.6g} default_frac={cal.default_frac:.4f} (target {cal.target:.4f})")
    if not cal.reached:
        print(f"calibration failed: default rate {cal.target:.4g} unreachable, closest {cal.default_frac:.4g}", file=sys.stderr)
        return EXIT_CONVERGENCE
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Outputs(cfg)
    try:
        if args.command == "solve":
            code = cmd_solve(cfg, out)
        elif args.command == "sweep":
            code = cmd_sweep(cfg, out)
        elif args.command == "figure":
            code = cmd_figure(cfg, out, int(args.figure_id))
        elif args.command == "validate":
            code = cmd_validate(cfg, out)
        else:
            code = cmd_calibrate(cfg, out)
    except (InfeasibleScenario, NoEquilibrium) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        code = EXIT_INFEASIBLE
    except (ConvergenceFailure, CalibrationFailure) as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        code = EXIT_CONVERGENCE
    except DomainError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        code = EXIT_CONFIG
    out.flush()
    return code


if __name__ == "__main__":
    sys.exit(main())
