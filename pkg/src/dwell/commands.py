"""Dwell subcommands

Every command reads the scenario loaded by :func:`~dwell.units.scenario.load_scenario_unit`,
writes its traces and reports to the output directory and returns the
exit code: 0 clean, 1 config error, 2 envelope abort, 3 certificate
infeasible.
"""

from argparse import ArgumentParser
from dataclasses import replace
from pathlib import Path
from typing import Dict, Optional

import numpy as np

from . import __version__
from .certificates import CertificateReport, certify, theorem1_report
from .command import Command
from .config import Config
from .exceptions import CertificateInfeasible, EnvelopeViolation, ScenarioError
from .logger import logger
from .scenario import (ScenarioConfig, build_certified, build_controller,
                       build_flight, build_linear, certificate_settings,
                       parse_ts_sweep)
from .sim import LinearScenario, monte_carlo_sweep, reference_sweep, run_comparison
from .trace import Trace, write_json
from .units.scenario import apply_overrides, load_scenario_unit, prepare_output
from .units.vars import (config_args, config_output_dir, config_plot, config_scenario,
                         config_scenario_hash, config_seed,
                         config_strict_norm_bounds, config_workers)

EXIT_STATUS = {0: "clean", 1: "config error", 2: "envelope abort", 3: "certificate infeasible"}
BOUNDS_COLUMNS = ("Ts", "lhs", "delta0", "delta1", "delta2", "satisfied")


def _scenario_arguments(parser: ArgumentParser, seed: bool = True, plot: bool = False,
                        strict: bool = False) -> ArgumentParser:
    parser.add_argument("scenario", help="scenario TOML file")
    parser.add_argument("--out", help="output directory (default: out)")
    if seed:
        parser.add_argument("--seed", type=int, help="seed of all random streams")
    if plot:
        parser.add_argument("--plot", action="store_true", default=False, help="write SVG plots")
    if strict:
        parser.add_argument("--strict-norm-bounds", action="store_true", default=False,
                            help="bound I - omega by its 2-norm")
    return parser


class ScenarioCommand(Command):
    """Base of the commands working on a scenario file"""
    name = None
    targets = [load_scenario_unit, apply_overrides, prepare_output]

    def summary(self, config: Config, exit_code: int, results: dict, diagnostics=()) -> Path:
        scenario: ScenarioConfig = config_scenario.get(config)
        payload = {
            "tool": "dwell",
            "version": __version__,
            "config_hash": config_scenario_hash.get(config),
            "scenario": scenario.meta.name,
            "command": self.name,
            "seed": config_seed.get(config),
            "exit_code": exit_code,
            "status": EXIT_STATUS[exit_code],
            "results": results,
            "diagnostics": list(diagnostics),
        }
        return write_json(self.output(config, "summary.json"), payload)

    @staticmethod
    def output(config: Config, name: str) -> Path:
        return Path(config_output_dir.get(config)) / name

    def write_trace(self, config: Config, trace: Trace, name: str = "trace.csv") -> Path:
        path = trace.write_csv(self.output(config, name), __version__, config_scenario_hash.get(config))
        logger.info("Wrote %s rows to %s", len(trace), path)
        return path

    def aborted(self, config: Config, exc: EnvelopeViolation, name: str = "trace.csv") -> int:
        """Write the partial trace and the summary of an aborted run"""
        if exc.trace is not None:
            self.write_trace(config, exc.trace, name)
        self.summary(config, exc.exit_code, {}, [exc.diagnostic])
        return exc.exit_code


def certificate_for(config: Config, linear: LinearScenario, Ts: Optional[float] = None) -> CertificateReport:
    scenario: ScenarioConfig = config_scenario.get(config)
    settings = certificate_settings(scenario, config_strict_norm_bounds.get(config))
    empirical = reference_sweep(linear, settings.rho_margin) if scenario.certificates.empirical else None
    return certify(
        linear.modes, linear.sets, linear.controller.filter,
        linear.controller.Ts if Ts is None else Ts,
        linear.signal, linear.x0, linear.command.sup_norm(), settings,
        empirical=empirical, horizon=linear.schedule.horizon,
    )


def bound_values(report: CertificateReport) -> Dict[str, float]:
    return {"xtilde": report.delta0, "x": report.rho, "u": report.rho_u, "e": report.delta1, "e_u": report.delta2}


class SimulateCommand(ScenarioCommand):
    """Run a scenario and write its trace"""
    name = "simulate"
    short_description = "simulate a scenario and write trace.csv"

    @classmethod
    def get_arguments(cls, parser: ArgumentParser) -> ArgumentParser:
        return _scenario_arguments(parser, plot=True)

    def run(self, config: Config) -> int:
        scenario: ScenarioConfig = config_scenario.get(config)
        seed = config_seed.get(config)
        try:
            if scenario.is_aircraft:
                # pylint: disable=import-outside-toplevel
                from .l2f.flight import flight_observables, run_flight
                trace = run_flight(build_flight(scenario), seed)
                results = flight_observables(trace)
            else:
                trace, results = run_comparison(build_linear(scenario), seed)
        except EnvelopeViolation as exc:
            return self.aborted(config, exc)
        self.write_trace(config, trace)
        if config_plot.get(config):
            # pylint: disable=import-outside-toplevel
            from .plotting import plot_trace
            plot_trace(trace, config_output_dir.get(config), aircraft=scenario.is_aircraft)
        self.summary(config, 0, {"observables": results}, trace.diagnostics)
        return 0


class CertifyCommand(ScenarioCommand):
    """Compute the stability and performance certificate"""
    name = "certify"
    short_description = "verify the certificate conditions and write certificate.json"

    @classmethod
    def get_arguments(cls, parser: ArgumentParser) -> ArgumentParser:
        return _scenario_arguments(parser, seed=False, strict=True)

    def run(self, config: Config) -> int:
        report = certificate_for(config, build_certified(config_scenario.get(config)))
        write_json(self.output(config, "certificate.json"), report.to_dict())
        if not report.feasible:
            logger.error("Certificate infeasible: %s", report.violation)
            self.summary(config, CertificateInfeasible.exit_code, {"violation": report.violation}, report.flags)
            return CertificateInfeasible.exit_code
        logger.info("Certificate holds, tau_d=%.4g delta0=%.4g", report.tau_d, report.delta0)
        self.summary(config, 0, {"tau_d": report.tau_d, "bounds": bound_values(report)}, report.flags)
        return 0


class CompareCommand(ScenarioCommand):
    """Run against the reference system and check the certified bounds

    A bound that does not hold, including an infinite one, ends the command
    with the certificate exit code.
    """
    name = "compare"
    short_description = "compare the adaptive loop with its reference and the certified bounds"

    @classmethod
    def get_arguments(cls, parser: ArgumentParser) -> ArgumentParser:
        return _scenario_arguments(parser, plot=True, strict=True)

    def run(self, config: Config) -> int:
        scenario: ScenarioConfig = config_scenario.get(config)
        if scenario.is_aircraft:
            return self.compare_flight(config, scenario)
        linear = build_linear(scenario)
        try:
            trace, values = run_comparison(linear, config_seed.get(config))
        except EnvelopeViolation as exc:
            return self.aborted(config, exc)
        report = certificate_for(config, linear)
        theorem = theorem1_report(report, values)
        self.write_trace(config, trace)
        write_json(self.output(config, "certificate.json"), report.to_dict())
        write_json(self.output(config, "theorem1.json"), theorem.to_dict())
        failed = [check.name for check in theorem.checks if not check.passed]
        if failed:
            logger.error("Observed norms not within the certified bounds: %s", ", ".join(failed))
        if config_plot.get(config):
            # pylint: disable=import-outside-toplevel
            from .plotting import plot_bounds, plot_trace
            plot_trace(trace, config_output_dir.get(config))
            plot_bounds(trace, bound_values(report), config_output_dir.get(config))
        exit_code = CertificateInfeasible.exit_code if failed else 0
        self.summary(config, exit_code, {"observables": values, "theorem1": theorem.to_dict()}, theorem.flags)
        return exit_code

    def compare_flight(self, config: Config, scenario: ScenarioConfig) -> int:
        """Paired baseline-only and L1 augmented flights"""
        # pylint: disable=import-outside-toplevel
        from .l2f.flight import flight_observables, run_flight
        flight = build_flight(scenario)
        seed = config_seed.get(config)
        results = {}
        diagnostics = []
        traces = {}
        try:
            traces["baseline"] = run_flight(replace(flight, controller=None), seed)
            results["baseline-only"] = flight_observables(traces["baseline"])
        except EnvelopeViolation as exc:
            # a diverging baseline is a result of the comparison, not an error
            diagnostics.append("baseline-only: {}".format(exc.diagnostic))
            if exc.trace is not None:
                traces["baseline"] = exc.trace
                results["baseline-only"] = dict(flight_observables(exc.trace), aborted=exc.diagnostic)
        if "baseline" in traces:
            self.write_trace(config, traces["baseline"], "baseline.csv")
        try:
            traces["l1"] = run_flight(replace(flight, controller=build_controller(scenario, 3)), seed)
        except EnvelopeViolation as exc:
            return self.aborted(config, exc, "l1.csv")
        self.write_trace(config, traces["l1"], "l1.csv")
        results["with-L1"] = flight_observables(traces["l1"])
        if "baseline-only" in results and results["with-L1"]["pitch_excursion"] > 0:
            results["pitch_excursion_ratio"] = (
                results["baseline-only"]["pitch_excursion"] / results["with-L1"]["pitch_excursion"])
        if config_plot.get(config):
            # pylint: disable=import-outside-toplevel
            from .plotting import plot_trace
            for name, trace in traces.items():
                plot_trace(trace, config_output_dir.get(config), aircraft=True, prefix=name + "_")
        self.summary(config, 0, results, diagnostics)
        return 0


class SweepCommand(ScenarioCommand):
    """Monte Carlo sweep over sampled uncertainty trajectories"""
    name = "sweep"
    short_description = "Monte Carlo sweep of the certified bounds"

    @classmethod
    def get_arguments(cls, parser: ArgumentParser) -> ArgumentParser:
        _scenario_arguments(parser)
        parser.add_argument("--runs", type=int, help="number of runs (default: outputs.runs)")
        parser.add_argument("--workers", type=int, help="worker processes")
        return parser

    def run(self, config: Config) -> int:
        scenario: ScenarioConfig = config_scenario.get(config)
        if scenario.is_aircraft:
            raise ScenarioError("sweep needs a [plant] scenario")
        linear = build_linear(scenario)
        runs = config_args.get(config).runs or scenario.outputs.runs
        if runs < 1:
            raise ScenarioError("--runs must be at least 1")
        report = certificate_for(config, linear)
        bounds = bound_values(report) if report.feasible else {}
        if not report.feasible:
            logger.warning("Certificate infeasible (%s), sweeping without bounds", report.violation)
        result = monte_carlo_sweep(linear, runs, config_seed.get(config), config_workers.get(config) or 1, bounds)
        write_json(self.output(config, "sweep.json"), result.to_dict())
        violations = result.violations()
        if any(violations.values()):
            logger.warning("Bound violations: %s", violations)
        self.summary(config, 0, {"statistics": result.statistics(), "violations": violations,
                                 "aborted": result.aborted}, report.flags)
        return 0


class BoundsCommand(ScenarioCommand):
    """Tabulate the sampling-time condition and the bounds over Ts"""
    name = "bounds"
    short_description = "tabulate (Ts, lhs, delta0, delta1, delta2) over a Ts sweep"

    @classmethod
    def get_arguments(cls, parser: ArgumentParser) -> ArgumentParser:
        _scenario_arguments(parser, seed=False, strict=True)
        parser.add_argument("--ts-sweep", help="lo:hi:n sampling times (default: the scenario Ts)")
        return parser

    def run(self, config: Config) -> int:
        scenario: ScenarioConfig = config_scenario.get(config)
        linear = build_certified(scenario)
        sweep = config_args.get(config).ts_sweep or scenario.outputs.ts_sweep
        times = parse_ts_sweep(sweep) if sweep else np.array([scenario.controller.Ts])
        rows = []
        violation = None
        for Ts in times:
            report = certificate_for(config, linear, float(Ts))
            if report.violation is not None and not report.violation.startswith("sampling time"):
                violation = report.violation
                break
            rows.append((float(Ts), report.ts_lhs, report.delta0, report.delta1, report.delta2,
                         float(report.ts_satisfied)))
        if violation is not None:
            logger.error("Certificate infeasible: %s", violation)
            self.summary(config, CertificateInfeasible.exit_code, {"violation": violation})
            return CertificateInfeasible.exit_code
        table = np.array(rows, dtype=float).reshape(-1, len(BOUNDS_COLUMNS))
        np.savetxt(self.output(config, "bounds.csv"), table, fmt="%.17g", delimiter=",",
                   header=",".join(BOUNDS_COLUMNS), comments="")
        print("{:>12} {:>12} {:>12} {:>12} {:>12} {:>4}".format(*BOUNDS_COLUMNS[:5], "ok"))
        for row in rows:
            print("{:12.6g} {:12.6g} {:12.6g} {:12.6g} {:12.6g} {:>4}".format(
                *row[:5], "yes" if row[5] else "no"))
        self.summary(config, 0, {"rows": [dict(zip(BOUNDS_COLUMNS, row)) for row in rows]})
        return 0
