"""Batch scenario runner: dispatch, artifact writing, exit-code contract.

Every scenario writes its artifacts into ``<out_root>/<name>/``:
``trajectory.csv`` (when a trajectory exists), ``report.csv`` with the
per-time check data, ``summary.csv`` for estimate checks, ``plot.svg``
unless plots are disabled, plus kind-specific extras (``kernel.csv``,
``x_trajectory.csv``).  A scenario passes iff every check it declares
passes; no check is ever skipped silently -- inapplicable configurations
raise and the scenario fails.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import backstepping as bs
from . import certify
from .errors import IssParabolicError, ScenarioError
from .grid import Field
from .monotone import constant_reduction_experiment, write_sandwich_csv
from .norms import lp_norms
from .scenarios import (
    Scenario,
    build_problem,
    default_weighted_sup_params,
    make_initial,
    make_signal,
    parse_scenario,
)
from .solver import BoundarySignal, SemilinearProblem, simulate, write_trajectory_csv
from .svgplot import write_line_plot

EXIT_PASS = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG_ERROR = 2


@dataclass
class ScenarioResult:
    name: str
    kind: str
    passed: bool
    min_margin: float
    wall_ms: float
    out_dir: Optional[Path]
    message: str = ""

    def summary_row(self) -> str:
        margin = f"{self.min_margin:.6g}" if math.isfinite(self.min_margin) else "nan"
        return f"{self.name},{self.kind},{str(self.passed).lower()},{margin},{self.wall_ms:.1f}"


def _fit_rate(times: np.ndarray, norms: np.ndarray, t_start: float = 0.0) -> float:
    keep = (times >= t_start) & (norms > norms.max() * 1e-12)
    if keep.sum() < 3:
        raise IssParabolicError("not enough resolvable samples for a decay-rate fit")
    return -float(np.polyfit(times[keep], np.log(norms[keep]), 1)[0])


def _write_norm_report(path, times, lhs, rhs) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write("t,lhs,rhs,margin\n")
        for t, lo, hi in zip(times, lhs, rhs):
            fh.write(f"{t:.17g},{lo:.17g},{hi:.17g},{hi - lo:.17g}\n")


def _plot_norms(out_dir: Path, scn: Scenario, times, series: dict, ylabel: str) -> None:
    write_line_plot(out_dir / "plot.svg", times, series, title=scn.name, xlabel="t", ylabel=ylabel, logy=scn.logy)


def _run_simulate(scn: Scenario, out_dir: Path, tol: Optional[float], plots: bool) -> tuple[bool, float]:
    rng = np.random.default_rng(scn.seed)
    problem = build_problem(scn, rng)
    traj = simulate(problem, scn.grid)
    write_trajectory_csv(traj, out_dir / "trajectory.csv")
    norms = lp_norms(traj.data, scn.grid.h, scn.norm_p)
    if scn.decay_rate is not None:
        rate_tol = tol if tol is not None else scn.decay_rate_tol
        fitted = _fit_rate(traj.times, norms)
        rel_err = abs(fitted - scn.decay_rate) / scn.decay_rate
        passed = rel_err <= rate_tol
        margin = rate_tol - rel_err
        rhs = norms[0] * np.exp(-scn.decay_rate * traj.times)
    else:
        passed, margin = True, math.inf
        rhs = norms
    _write_norm_report(out_dir / "report.csv", traj.times, norms, rhs)
    if plots:
        series = {"norm": norms}
        if scn.decay_rate is not None:
            series["target"] = rhs
        _plot_norms(out_dir, scn, traj.times, series, f"L{scn.norm_p:g} norm")
    return passed, margin


def _run_sandwich(scn: Scenario, out_dir: Path, tol: Optional[float], plots: bool) -> tuple[bool, float]:
    rng = np.random.default_rng(scn.seed)
    problem = build_problem(scn, rng)
    report = constant_reduction_experiment(
        problem, scn.grid, scn.epsilon, tol if tol is not None else scn.ordering_tol
    )
    write_trajectory_csv(report.traj, out_dir / "trajectory.csv")
    write_sandwich_csv(report, out_dir / "report.csv")
    if plots:
        _plot_norms(
            out_dir, scn, report.times,
            {"gap_low": report.min_gap_low, "gap_high": report.min_gap_high},
            "envelope gap",
        )
    margin = float(min(report.min_gap_low.min(), report.min_gap_high.min()))
    return report.passed, margin


def _run_iss_check(scn: Scenario, out_dir: Path, tol: Optional[float], plots: bool) -> tuple[bool, float]:
    rng = np.random.default_rng(scn.seed)
    problem = build_problem(scn, rng)
    traj = simulate(problem, scn.grid)
    write_trajectory_csv(traj, out_dir / "trajectory.csv")
    rel_tol = tol if tol is not None else scn.tol
    if scn.estimate == "weighted_l1":
        report = certify.check_weighted_l1(traj, rel_tol, gain_override=scn.gain_override)
    elif scn.estimate == "l2":
        report = certify.check_l2(traj, rel_tol)
    else:
        sigma, theta = default_weighted_sup_params(scn.a, scn.sigma, scn.theta)
        report = certify.check_weighted_sup(traj, sigma, theta, rel_tol)
    certify.write_report_csv(report, out_dir / "report.csv")
    certify.write_summary_csv(report, out_dir / "summary.csv")
    if plots:
        _plot_norms(out_dir, scn, report.times, {"lhs": report.lhs, "rhs": report.rhs}, scn.estimate)
    return report.passed, report.margin_rel


def _run_lyapunov(scn: Scenario, out_dir: Path, tol: Optional[float], plots: bool) -> tuple[bool, float]:
    rng = np.random.default_rng(scn.seed)
    problem = build_problem(scn, rng)
    report = certify.lyapunov_decay_certificate(
        problem, scn.grid, scn.p, tol if tol is not None else scn.tol
    )
    certify.write_decay_csv(report, out_dir / "report.csv")
    traj = simulate(problem, scn.grid)
    write_trajectory_csv(traj, out_dir / "trajectory.csv")
    if plots:
        _plot_norms(out_dir, scn, report.times, {"lhs": report.norm_lhs, "rhs": report.norm_rhs}, f"L{scn.p:g} norm")
    return report.passed, min(report.margin_v_rel, report.margin_norm_rel)


def _run_kernel_synthesis(scn: Scenario, out_dir: Path, tol: Optional[float], plots: bool) -> tuple[bool, float]:
    rng = np.random.default_rng(scn.seed)
    kernel = bs.solve_kernel(scn.a, scn.k_reaction, scn.grid)
    inverse = bs.solve_inverse_kernel(kernel)
    bs.write_kernel_csv(kernel, out_dir / "kernel.csv")

    oracle = bs.kernel_series_reference(scn.a, scn.k_reaction, scn.grid)
    oracle_err = float(np.max(np.abs(kernel.samples - oracle)))

    fields = bs._random_smooth_fields(scn.grid, scn.n_fields, rng)
    B = bs._transform_matrix(kernel)
    L = bs._transform_matrix(inverse)
    transformed = fields + fields @ B.T
    back = transformed + transformed @ L.T
    roundtrip_err = float(np.max(np.abs(back - fields)))

    oracle_tol = scn.oracle_tol if tol is None else max(scn.oracle_tol, tol)
    checks = [
        ("oracle_sup_diff", oracle_err, oracle_tol),
        ("roundtrip_sup_err", roundtrip_err, scn.roundtrip_tol),
    ]
    with open(out_dir / "report.csv", "w", newline="\n") as fh:
        fh.write("check,value,threshold,pass\n")
        for name, value, threshold in checks:
            fh.write(f"{name},{value:.17g},{threshold:.17g},{str(value <= threshold).lower()}\n")
    if plots:
        write_line_plot(
            out_dir / "plot.svg", scn.grid.nodes, {"k(0,s)": kernel.samples[0]},
            title=scn.name, xlabel="s", ylabel="feedback kernel", logy=False,
        )
    passed = all(value <= threshold for _, value, threshold in checks)
    margin = min((threshold - value) / threshold for _, value, threshold in checks)
    return passed, margin


def _fit_loop_constants(scn: Scenario, d_signal: BoundarySignal) -> certify.ExpIssConstants:
    """Fit target-system constants from two auxiliary heat runs."""
    grid = scn.grid
    z = grid.nodes
    decay_problem = SemilinearProblem(
        a=scn.a,
        initial=Field(np.sin(np.pi * z), grid),
        boundary_left=BoundarySignal.zero(),
        boundary_right=BoundarySignal.zero(),
    )
    forced_problem = SemilinearProblem(
        a=scn.a,
        initial=Field.zeros(grid),
        boundary_left=d_signal,
        boundary_right=BoundarySignal.zero(),
    )
    runs = [simulate(decay_problem, grid), simulate(forced_problem, grid)]
    return certify.estimate_exp_iss_constants(runs, scn.p)


def _run_backstepping(scn: Scenario, out_dir: Path, tol: Optional[float], plots: bool) -> tuple[bool, float]:
    rng = np.random.default_rng(scn.seed)
    grid = scn.grid
    if scn.mode == "open":
        problem = SemilinearProblem(
            a=scn.a,
            initial=Field(np.sin(np.pi * grid.nodes), grid),
            boundary_left=BoundarySignal.zero(),
            boundary_right=BoundarySignal.zero(),
            reaction=lambda z, w, grad: scn.k_reaction * w,
            lipschitz_k=abs(scn.k_reaction),
        )
        traj = simulate(problem, grid)
        write_trajectory_csv(traj, out_dir / "trajectory.csv")
        norms = lp_norms(traj.data, grid.h, scn.p)
        growth = float(norms.max() / norms[0])
        threshold = np.full_like(norms, norms[0] * scn.growth_min)
        _write_norm_report(out_dir / "report.csv", traj.times, norms, threshold)
        if plots:
            _plot_norms(out_dir, scn, traj.times, {"norm": norms, "growth_cut": threshold}, "open-loop norm")
        passed = growth >= scn.growth_min
        return passed, growth / scn.growth_min - 1.0

    kernel = bs.solve_kernel(scn.a, scn.k_reaction, grid)
    d_signal = make_signal(scn.d0, grid, scn.base_dir)
    base = make_initial(scn.initial, grid, rng, 0.0, 0.0)
    y0 = bs.compatible_initial_state(kernel, base, float(d_signal(0.0)))
    run = bs.simulate_closed_loop(scn.a, scn.k_reaction, y0, d_signal, grid, kernel=kernel)
    write_trajectory_csv(run.y_traj, out_dir / "trajectory.csv")
    write_trajectory_csv(run.x_traj, out_dir / "x_trajectory.csv")
    norms = lp_norms(run.y_traj.data, grid.h, scn.p)

    if d_signal.sup_norm == 0.0:
        target = scn.a * math.pi**2
        rate_tol = tol if tol is not None else scn.rate_tol
        fitted = _fit_rate(run.y_traj.times, norms, t_start=0.2 * grid.t_final)
        rel_err = abs(fitted - target) / target
        passed = rel_err <= rate_tol
        margin = rate_tol - rel_err
        rhs = norms[0] * np.exp(-target * run.y_traj.times)
        _write_norm_report(out_dir / "report.csv", run.y_traj.times, norms, rhs)
        if plots:
            _plot_norms(out_dir, scn, run.y_traj.times, {"closed_loop": norms, "target_rate": rhs}, "norm")
        return passed, margin

    inverse = bs.solve_inverse_kernel(kernel)
    k1, k2 = bs.estimate_equivalence_constants(kernel, inverse, scn.p)
    iss = _fit_loop_constants(scn, d_signal)
    constants = bs.ClosedLoopConstants(k1=k1, k2=k2, iss=iss)
    report = bs.certify_closed_loop(run.y_traj, constants, run.disturbance, tol=1e-6 if tol is None else tol)
    certify.write_report_csv(report, out_dir / "report.csv")
    certify.write_summary_csv(report, out_dir / "summary.csv")
    if plots:
        _plot_norms(out_dir, scn, report.times, {"lhs": report.lhs, "rhs": report.rhs}, "closed-loop norm")
    return report.passed, report.margin_rel


_DISPATCH = {
    "simulate": _run_simulate,
    "sandwich": _run_sandwich,
    "iss_check": _run_iss_check,
    "lyapunov": _run_lyapunov,
    "kernel_synthesis": _run_kernel_synthesis,
    "backstepping_loop": _run_backstepping,
}


def run_scenario(
    scenario: Scenario,
    out_root,
    tol: Optional[float] = None,
    no_plots: bool = False,
    seed_override: Optional[int] = None,
) -> ScenarioResult:
    """Execute one scenario; artifacts land in out_root/<name>/."""
    start = time.perf_counter()
    if seed_override is not None:
        scenario = replace(scenario, seed=seed_override)
    out_dir = Path(out_root) / scenario.name
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        passed, margin = _DISPATCH[scenario.kind](scenario, out_dir, tol, not no_plots)
        message = ""
    except IssParabolicError as exc:
        passed, margin, message = False, -math.inf, str(exc)
    wall_ms = (time.perf_counter() - start) * 1e3
    return ScenarioResult(
        name=scenario.name,
        kind=scenario.kind,
        passed=passed,
        min_margin=margin,
        wall_ms=wall_ms,
        out_dir=out_dir,
        message=message,
    )


def run_scenario_file(path, out_root, **kwargs) -> ScenarioResult:
    return run_scenario(parse_scenario(path), out_root, **kwargs)


def run_suite(directory, out_root, tol=None, no_plots=False, seed_override=None) -> tuple[list[ScenarioResult], int]:
    """Run every scenario file in a directory; no fail-fast.

    Returns the per-scenario results and the suite exit code (0 all pass,
    1 any failure, 2 empty or unreadable directory).
    """
    directory = Path(directory)
    if not directory.is_dir():
        return [], EXIT_CONFIG_ERROR
    files = sorted(directory.glob("*.scn"))
    if not files:
        return [], EXIT_CONFIG_ERROR
    results = []
    for f in files:
        try:
            scn = parse_scenario(f)
        except ScenarioError as exc:
            results.append(
                ScenarioResult(
                    name=f.stem, kind="?", passed=False, min_margin=-math.inf,
                    wall_ms=0.0, out_dir=None, message=str(exc),
                )
            )
            continue
        results.append(run_scenario(scn, out_root, tol=tol, no_plots=no_plots, seed_override=seed_override))
    code = EXIT_PASS if all(r.passed for r in results) else EXIT_CHECK_FAILED
    return results, code
