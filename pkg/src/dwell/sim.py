"""Fixed step co-simulation of the linear switched plant

The plant, the L1 controller, the reference system and the ideal system are
integrated on one RK4 grid. At every grid point the order is: switch
(predictor re-initialization), sample (adaptive law), record, step.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence

import numpy as np

from .controller import L1Config, L1Controller
from .exceptions import DimensionError, EnvelopeViolation
from .integrate import rk4_step, steps_per
from .logger import logger
from .model import (CommandSignal, FilteredNoiseShape, ModeSet, RampHoldShape,
                    SinusoidShape, SwitchingSignal, UncertaintySets,
                    UncertaintyTrajectory, VertexPath, plant_deriv)
from .reference import (IdealState, ReferenceState, build_closedloop_matrices,
                        ideal_deriv, reference_deriv)
from .trace import SUP_COLUMNS, Trace, linear_columns, observables

DEFAULT_CONTROL_RATE = 50.0
DEFAULT_MODEL_RATE = 5.0


@dataclass(frozen=True)
class Schedule:
    """Clock of a simulation

    :ivar h: Integration step
    :ivar Ts: Adaptation period
    :ivar horizon: Simulated time
    :ivar control_rate: Rate of the held control signal in Hz
    :ivar model_rate: Rate of model publishes in Hz
    """
    h: float
    Ts: float
    horizon: float
    control_rate: float = DEFAULT_CONTROL_RATE
    model_rate: float = DEFAULT_MODEL_RATE

    def __post_init__(self):
        if self.h <= 0 or self.Ts <= 0 or self.horizon < 0:
            raise DimensionError("h and Ts must be positive, horizon nonnegative")
        if steps_per(self.Ts, self.h) is None:
            raise DimensionError("Ts={} is not a multiple of h={}".format(self.Ts, self.h))

    @classmethod
    def default(cls, Ts: float, horizon: float, **kwargs) -> "Schedule":
        """h = min(Ts / 10, 1 ms)"""
        return cls(min(Ts / 10.0, 1e-3), Ts, horizon, **kwargs)

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.h))

    @property
    def sample_every(self) -> int:
        return steps_per(self.Ts, self.h)

    def every(self, rate: float) -> int:
        """Steps per period of ``rate`` Hz

        :raises DimensionError: If the period is not a multiple of h
        """
        count = steps_per(1.0 / rate, self.h)
        if count is None:
            raise DimensionError("1/{} Hz is not a multiple of h={}".format(rate, self.h))
        return count

    def step_of(self, t: float) -> int:
        count = steps_per(t, self.h) if t > 0 else 0
        if count is None:
            raise DimensionError("t={} is not on the integration grid".format(t))
        return count


# pylint: disable=too-many-instance-attributes
@dataclass(frozen=True, eq=False)
class LinearScenario:
    """Everything a linear plant run needs

    :ivar measurement_sigma: Noise on the state measured at sample instants
    :ivar reinit_offset: Error added to the predictor after every switch
    """
    modes: ModeSet
    sets: UncertaintySets
    trajectory: UncertaintyTrajectory
    signal: SwitchingSignal
    command: CommandSignal
    controller: L1Config
    x0: np.ndarray
    schedule: Schedule
    measurement_sigma: float = 0.0
    reinit_offset: Optional[np.ndarray] = None
    monitor: Optional[Sequence[np.ndarray]] = None


class _Layout:
    """Slices of the flat integration state [x, xhat, u_int, x_f, xbar, x_id]"""

    def __init__(self, n: int, m: int, n_f: int):
        sizes = (("x", n), ("xhat", n), ("u_int", m), ("x_f", n_f), ("xbar", n + n_f + m), ("x_id", n))
        self.slices = {}
        start = 0
        for name, size in sizes:
            self.slices[name] = slice(start, start + size)
            start += size
        self.size = start

    def __getitem__(self, name):
        return self.slices[name]


def _is_static(path: VertexPath) -> bool:
    return np.array_equal(path.start, path.end)


# pylint: disable=too-many-locals, too-many-statements
def run_scenario(scenario: LinearScenario, seed: Optional[int] = None) -> Trace:
    """Simulate the adaptive loop together with its reference and ideal systems

    :param scenario: The linear scenario
    :param seed: Seed of the measurement and re-initialization noise
    :raises EnvelopeViolation: On a non finite state, the trace up to the last good step is attached
    """
    modes, trajectory, command = scenario.modes, scenario.trajectory, scenario.command
    schedule, config = scenario.schedule, scenario.controller
    filt = config.filter
    n, m, n_f = modes.n, modes.m, filt.n_f
    rng = np.random.default_rng(seed)
    layout = _Layout(n, m, n_f)

    mode_index = scenario.signal.mode_at(0.0)
    mode = modes[mode_index]
    x0 = np.asarray(scenario.x0, dtype=float)
    controller = L1Controller.create(config, mode, x0)
    y = np.zeros(layout.size)
    y[layout["x"]] = x0
    y[layout["xhat"]] = x0
    y[layout["xbar"]] = ReferenceState.initial(x0, n_f, m).xbar
    y[layout["x_id"]] = x0

    switch_steps = {schedule.step_of(t): index for t, index in scenario.signal.events[1:]}
    sample_every = schedule.sample_every
    zoh_every = schedule.every(config.zoh_control_rate) if config.zoh_control_rate else None
    static_theta = _is_static(trajectory.theta_path)
    matrices_cache: Dict[int, object] = {}

    def matrices(index, t):
        if static_theta and index in matrices_cache:
            return matrices_cache[index]
        built = build_closedloop_matrices(modes[index], trajectory.theta(t), trajectory.omega(index), filt)
        if static_theta:
            matrices_cache[index] = built
        return built

    trace = Trace(linear_columns(n, m, lyapunov=scenario.monitor is not None))
    sups = dict.fromkeys(SUP_COLUMNS, 0.0)
    u_held = None

    for step in range(schedule.n_steps + 1):
        t = step * schedule.h
        switched = 0.0
        controller.state.xhat = y[layout["xhat"]].copy()
        controller.state.u_int = y[layout["u_int"]].copy()
        controller.state.x_f = y[layout["x_f"]].copy()
        if step in switch_steps:
            mode_index = switch_steps[step]
            mode = modes[mode_index]
            controller.switch(mode, y[layout["x"]], rng=rng)
            if scenario.reinit_offset is not None:
                controller.state.xhat = controller.state.xhat + scenario.reinit_offset
            y[layout["xhat"]] = controller.state.xhat
            switched = 1.0
            logger.debug("Switch to mode %s at t=%s", mode_index, t)
        if step % sample_every == 0:
            measured = y[layout["x"]]
            if scenario.measurement_sigma > 0:
                measured = measured + scenario.measurement_sigma * rng.standard_normal(n)
            controller.sample(t, mode, measured)
        if zoh_every and step % zoh_every == 0:
            u_held = controller.state.u.copy()

        r = command(t)
        x = y[layout["x"]]
        xhat = y[layout["xhat"]]
        u = u_held if u_held is not None else -y[layout["u_int"]]
        reference = ReferenceState(y[layout["xbar"]], n, m)
        u_id, _ = IdealState(y[layout["x_id"]]).outputs(mode, r)
        xtilde = xhat - x
        sups["sup_xtilde"] = max(sups["sup_xtilde"], float(np.linalg.norm(xtilde)))
        sups["sup_x"] = max(sups["sup_x"], float(np.linalg.norm(x)))
        sups["sup_u"] = max(sups["sup_u"], float(np.linalg.norm(u)))
        sups["sup_e"] = max(sups["sup_e"], float(np.linalg.norm(reference.x_ref - x)))
        sups["sup_eu"] = max(sups["sup_eu"], float(np.linalg.norm(reference.u_ref - u)))
        record = {
            "t": t, "x": x, "xhat": xhat, "x_ref": reference.x_ref, "x_id": y[layout["x_id"]],
            "u": u, "u_ref": reference.u_ref, "u_id": u_id,
            "eta1": controller.state.eta1, "eta2": controller.state.eta2, "xtilde": xtilde,
            "mode": mode_index, "switch": switched, "publish": 0.0,
        }
        record.update(sups)
        if scenario.monitor is not None:
            xbar = reference.xbar
            record["lyapunov"] = float(xbar @ scenario.monitor[mode_index] @ xbar)
        trace.append(record)

        if step == schedule.n_steps:
            break

        def deriv(t_stage, state, mode=mode, mode_index=mode_index):
            r_stage = command(t_stage)
            theta = trajectory.theta(t_stage)
            d = trajectory.d(t_stage)
            omega = trajectory.omega(mode_index)
            u_int = state[layout["u_int"]]
            u_stage = u_held if u_held is not None else -u_int
            xhat_dot, u_int_dot, x_f_dot = controller.derivatives(
                mode, state[layout["xhat"]], u_int, state[layout["x_f"]], r_stage, u_held)
            derivative = np.empty_like(state)
            derivative[layout["x"]] = plant_deriv(mode, state[layout["x"]], u_stage, theta, d, omega)
            derivative[layout["xhat"]] = xhat_dot
            derivative[layout["u_int"]] = u_int_dot
            derivative[layout["x_f"]] = x_f_dot
            derivative[layout["xbar"]] = reference_deriv(state[layout["xbar"]], matrices(mode_index, t_stage),
                                                         d, r_stage)
            derivative[layout["x_id"]] = ideal_deriv(state[layout["x_id"]], mode, r_stage)
            return derivative

        y = rk4_step(deriv, t, y, schedule.h)
        if not np.all(np.isfinite(y)):
            diagnostic = "non finite state after t={:.6g}".format(t)
            logger.error("Simulation aborted: %s", diagnostic)
            raise EnvelopeViolation(diagnostic, trace)
    return trace


def run_comparison(scenario: LinearScenario, seed: Optional[int] = None):
    """Run the scenario and extract the sup norms bounded by the certificate

    :returns: (trace, observables)
    """
    trace = run_scenario(scenario, seed)
    return trace, observables(trace)


@dataclass(frozen=True)
class ErrorSplit:
    """Predictor error at sample instants split by its source

    :ivar t: Sample instants that close a period
    :ivar adaptive: Response to the error at the previous sample under the held estimates
    :ivar uncertainty: Remainder, driven by the uncertainty alone
    """
    t: np.ndarray
    adaptive: np.ndarray
    uncertainty: np.ndarray


def split_predictor_error(scenario: LinearScenario, trace: Trace) -> ErrorSplit:
    """Decompose xtilde over every sample period of a finished run

    The adaptive part solves z' = A z + B eta1 + B_perp eta2 from the error
    at the start of the period on the integration grid, it vanishes at the
    end of the period. Periods containing a switch are skipped.
    """
    schedule = scenario.schedule
    every = schedule.sample_every
    xtilde, eta1, eta2 = trace.block("xtilde"), trace.block("eta1"), trace.block("eta2")
    modes, switches = trace.column("mode"), trace.column("switch")
    times, adaptive, uncertainty = [], [], []
    for start in range(0, len(trace) - every, every):
        end = start + every
        if np.any(switches[start + 1:end + 1]):
            continue
        mode = scenario.modes[int(modes[start])]
        forcing = mode.B @ eta1[start] + mode.Bperp @ eta2[start]

        def deriv(_, z, mode=mode, forcing=forcing):
            return mode.A @ z + forcing

        z = xtilde[start].copy()
        for step in range(every):
            z = rk4_step(deriv, (start + step) * schedule.h, z, schedule.h)
        times.append(end * schedule.h)
        adaptive.append(z)
        uncertainty.append(xtilde[end] - z)
    n = scenario.modes.n
    return ErrorSplit(np.array(times), np.array(adaptive).reshape(-1, n), np.array(uncertainty).reshape(-1, n))


def reference_sweep(scenario: LinearScenario, margin: float = 1.2):
    """Empirical (rho_r, rho_ur) over the constant vertex trajectories

    Only the reference system matters here, the adaptive loop is simulated
    along but ignored.
    """
    sets = scenario.sets
    rho_r = rho_ur = 0.0
    for theta_index in range(len(sets.theta_vertices)):
        for d_index in range(len(sets.d_vertices)):
            for omega_index in range(len(sets.omega_vertices)):
                trajectory = UncertaintyTrajectory(
                    sets,
                    VertexPath.fixed(np.eye(len(sets.theta_vertices))[theta_index]),
                    VertexPath.fixed(np.eye(len(sets.d_vertices))[d_index]),
                    tuple(np.eye(len(sets.omega_vertices))[omega_index] for _ in scenario.modes),
                )
                trace = run_scenario(replace(scenario, trajectory=trajectory, monitor=None))
                rho_r = max(rho_r, trace.sup_norm("x_ref"))
                rho_ur = max(rho_ur, trace.sup_norm("u_ref"))
    return margin * rho_r, margin * rho_ur


def _random_weights(rng: np.random.Generator, count: int) -> np.ndarray:
    if count == 1:
        return np.ones(1)
    if rng.random() < 0.5:
        weights = np.zeros(count)
        weights[rng.integers(count)] = 1.0
        return weights
    return rng.dirichlet(np.ones(count))


def _random_shape(rng: np.random.Generator, horizon: float):
    choice = rng.integers(3)
    if choice == 0:
        return SinusoidShape(frequency=float(rng.uniform(0.05, 1.0)), phase=float(rng.uniform(0, 2 * math.pi)))
    if choice == 1:
        return RampHoldShape(start=float(rng.uniform(0, max(horizon, 1e-3))), duration=float(rng.uniform(0, 2.0)))
    return FilteredNoiseShape.generate(rng, max(horizon, 0.1), bandwidth=float(rng.uniform(0.5, 5.0)))


def sample_trajectory(sets: UncertaintySets, n_modes: int, horizon: float,
                      rng: np.random.Generator) -> UncertaintyTrajectory:
    """Random trajectory from a vertex mixture distribution, always inside the polytopes"""
    def path(count):
        return VertexPath(_random_weights(rng, count), _random_weights(rng, count), _random_shape(rng, horizon))

    return UncertaintyTrajectory(
        sets,
        path(len(sets.theta_vertices)),
        path(len(sets.d_vertices)),
        tuple(_random_weights(rng, len(sets.omega_vertices)) for _ in range(n_modes)),
    )


def _sweep_run(arguments):
    scenario, sequence, index, seed = arguments
    if index > 0:
        rng = np.random.default_rng(sequence)
        trajectory = sample_trajectory(scenario.sets, len(scenario.modes), scenario.schedule.horizon, rng)
        scenario = replace(scenario, trajectory=trajectory)
        seed = int(rng.integers(2 ** 32))
    try:
        _, values = run_comparison(scenario, seed)
    except EnvelopeViolation as exc:
        values = {"aborted": exc.diagnostic}
    return values


@dataclass
class SweepResult:
    """Aggregate of a Monte Carlo sweep

    :ivar runs: Observables of each run, run 0 uses the configured trajectory
    :ivar bounds: Certified bounds the runs are checked against, if any
    """
    runs: List[Dict[str, float]]
    bounds: Dict[str, float] = field(default_factory=dict)

    @property
    def aborted(self) -> int:
        return sum(1 for run in self.runs if "aborted" in run)

    def statistics(self) -> Dict[str, Dict[str, float]]:
        finished = [run for run in self.runs if "aborted" not in run]
        result = {}
        for name in ("xtilde", "x", "u", "e", "e_u"):
            values = np.array([run[name] for run in finished]) if finished else np.zeros(1)
            result[name] = {
                "max": float(np.max(values)),
                "mean": float(np.mean(values)),
                "p50": float(np.percentile(values, 50)),
                "p95": float(np.percentile(values, 95)),
            }
        return result

    def violations(self) -> Dict[str, int]:
        counts = {}
        for name, bound in self.bounds.items():
            strict = name == "xtilde"
            counts[name] = sum(
                1 for run in self.runs
                if "aborted" in run or (run[name] >= bound if strict else run[name] > bound)
            )
        return counts

    def to_dict(self) -> dict:
        return {
            "n_runs": len(self.runs),
            "aborted": self.aborted,
            "statistics": self.statistics(),
            "bounds": dict(self.bounds),
            "violations": self.violations(),
            "runs": self.runs,
        }


def monte_carlo_sweep(scenario: LinearScenario, n_runs: int, seed: int, workers: int = 1,
                      bounds: Optional[Dict[str, float]] = None) -> SweepResult:
    """Run ``n_runs`` comparisons with sampled uncertainty trajectories

    Each run gets its own stream from ``SeedSequence(seed).spawn``, results
    are collected in run order so the outcome does not depend on ``workers``.
    """
    if n_runs < 1:
        raise DimensionError("n_runs must be at least 1")
    sequences = np.random.SeedSequence(seed).spawn(n_runs)
    arguments = [(scenario, sequence, index, seed) for index, sequence in enumerate(sequences)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            runs = list(executor.map(_sweep_run, arguments))
    else:
        runs = [_sweep_run(item) for item in arguments]
    logger.info("Sweep of %s runs finished", n_runs)
    return SweepResult(runs, dict(bounds or {}))
