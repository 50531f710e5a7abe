"""Scenario files

Scenarios are TOML documents validated by the :class:`ScenarioConfig` model
tree before anything is computed. Unknown keys are rejected everywhere.
The builders turn a validated config into the simulation objects.
"""

import hashlib
import json
import math
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .certificates import CertificateSettings
from .controller import REINIT_MEASURED, FilterRealization, L1Config
from .exceptions import DimensionError, DwellError, ScenarioError
from .model import (COMMAND_KINDS, CommandSignal, ConstantShape,
                    FilteredNoiseShape, ModeDefinition, ModeSet,
                    RampHoldShape, SinusoidShape, SwitchingSignal,
                    UncertaintySets, UncertaintyTrajectory, VertexPath,
                    validate_scenario, vertex_weights)
from .sim import LinearScenario, Schedule

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

Matrix = Union[float, List[float], List[List[float]]]
Vector = Union[float, List[float]]
Selection = Union[str, int, List[float]]

COMMANDS = ("simulate", "certify", "compare", "sweep", "bounds")


class Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class MetaSection(Section):
    name: str = "scenario"
    description: str = ""
    command: str = "simulate"
    expect_exit: int = 0
    seed: int = 0

    @model_validator(mode="after")
    def _known_command(self):
        if self.command not in COMMANDS:
            raise ValueError("unknown command {!r}".format(self.command))
        return self


class ModeSection(Section):
    A: Matrix
    B: Matrix
    C: Matrix
    k: Matrix


class PlantSection(Section):
    modes: List[ModeSection] = Field(min_length=1)
    x0: Vector = 0.0


class AircraftSection(Section):
    truth_model: str = "simplified"
    qbar: float = Field(500.0, gt=0)
    gamma0: float = 0.0
    mass: float = Field(10.0, gt=0)
    inertia: Matrix = [[0.8, 0.0, 0.0], [0.0, 1.2, 0.0], [0.0, 0.0, 1.8]]
    S: float = Field(0.5, gt=0)
    b: float = Field(1.7, gt=0)
    cbar: float = Field(0.3, gt=0)
    aero: dict = Field(default_factory=dict)


class ShapeSection(Section):
    kind: str = "constant"
    level: float = 0.0
    frequency: float = 1.0
    phase: float = 0.0
    start: float = 0.0
    duration: float = 1.0
    bandwidth: float = 1.0
    intensity: float = 0.5
    seed: int = 0


class PathSection(Section):
    start: Selection = "centroid"
    end: Optional[Selection] = None
    shape: ShapeSection = Field(default_factory=ShapeSection)


class TrajectorySection(Section):
    theta: PathSection = Field(default_factory=PathSection)
    d: PathSection = Field(default_factory=PathSection)
    omega: Selection = "centroid"
    # one selection per mode, overrides ``omega``
    omega_per_mode: Optional[List[Selection]] = None


class UncertaintySection(Section):
    theta_vertices: List[Matrix] = Field(default_factory=list)
    d_vertices: List[Vector] = Field(default_factory=list)
    omega_vertices: List[Matrix] = Field(default_factory=list)
    trajectory: TrajectorySection = Field(default_factory=TrajectorySection)


class FilterSection(Section):
    gain: Optional[float] = None
    A_f: Optional[Matrix] = None
    B_f: Optional[Matrix] = None
    C_f: Optional[Matrix] = None
    D_f: Optional[Matrix] = None

    @model_validator(mode="after")
    def _one_form(self):
        state_space = (self.A_f, self.B_f, self.C_f, self.D_f)
        if self.gain is not None and any(item is not None for item in state_space):
            raise ValueError("give either gain or A_f/B_f/C_f/D_f")
        if self.gain is None and any(item is None for item in state_space):
            raise ValueError("filter needs a gain or all of A_f, B_f, C_f, D_f")
        return self


class ControllerSection(Section):
    enabled: bool = True
    Ts: float = Field(0.005, gt=0)
    filter: FilterSection = Field(default_factory=lambda: FilterSection(gain=20.0))
    reinit_policy: str = REINIT_MEASURED
    noise_sigma: float = Field(0.0, ge=0)
    measurement_sigma: float = Field(0.0, ge=0)
    reinit_offset: Optional[Vector] = None
    zoh_control_rate: Optional[float] = Field(None, gt=0)


class ScheduleSection(Section):
    h: Optional[float] = Field(None, gt=0)
    horizon: float = Field(10.0, ge=0)
    control_rate: float = Field(50.0, gt=0)
    model_rate: float = Field(5.0, gt=0)
    switches: List[Tuple[float, int]] = Field(default_factory=lambda: [(0.0, 0)])


class CertificatesSection(Section):
    a_star: float = Field(0.5, gt=0, lt=1)
    a: float = Field(0.25, gt=0, lt=1)
    delta0: Optional[float] = Field(None, gt=0)
    strict_norm_bounds: bool = False
    nu_floor: float = Field(1e-6, gt=0)
    rho_margin: float = Field(1.2, ge=1)
    empirical: bool = False

    @model_validator(mode="after")
    def _ordered(self):
        if not self.a < self.a_star:
            raise ValueError("need a < a_star")
        return self


class ReferenceSection(Section):
    kind: str = "constant"
    amplitude: Vector = 0.0
    start: float = 0.0
    frequency: float = 0.5
    width: float = 1.0

    @model_validator(mode="after")
    def _known_kind(self):
        if self.kind not in COMMAND_KINDS:
            raise ValueError("unknown reference kind {!r}".format(self.kind))
        return self


class OutputsSection(Section):
    plot: bool = False
    runs: int = Field(100, ge=1)
    workers: int = Field(1, ge=1)
    ts_sweep: Optional[str] = None


class LearnerSection(Section):
    enabled: bool = True
    p0: float = Field(1e6, gt=0)
    forgetting: float = Field(1.0, gt=0, le=1)
    prior: str = "airframe"
    publish_threshold: float = Field(0.02, ge=0)
    trust: float = Field(1e-2, gt=0)
    tau_d: Optional[float] = Field(None, ge=0)


class PtiSection(Section):
    enabled: bool = True
    base_period: float = Field(10.0, gt=0)
    count: int = Field(8, ge=1)
    amplitude: float = Field(0.02, ge=0)
    start: float = 0.0
    harmonics: Optional[dict] = None


class DestabilizeSection(Section):
    pitch_alpha_gain: float = 0.0
    pitch_static_margin: Optional[float] = None
    roll_rate_gain: float = 0.0
    roll_neutral: bool = False


class GuidanceSection(Section):
    mode: str = "track"
    kind: str = "constant"
    amplitude: List[float] = Field(default_factory=lambda: [0.0, 0.0])
    start: float = 0.0
    frequency: float = 0.5
    width: float = 1.0
    beta_cmd: float = 0.0
    K_chi: float = Field(0.5, gt=0)
    zeta: float = Field(0.8, gt=0)
    omega_floor: float = Field(0.5, gt=0)


class ScenarioConfig(Section):
    """Validated scenario"""
    meta: MetaSection = Field(default_factory=MetaSection)
    plant: Optional[PlantSection] = None
    aircraft: Optional[AircraftSection] = None
    uncertainty: UncertaintySection = Field(default_factory=UncertaintySection)
    controller: ControllerSection = Field(default_factory=ControllerSection)
    schedule: ScheduleSection = Field(default_factory=ScheduleSection)
    certificates: CertificatesSection = Field(default_factory=CertificatesSection)
    reference: ReferenceSection = Field(default_factory=ReferenceSection)
    outputs: OutputsSection = Field(default_factory=OutputsSection)
    learner: LearnerSection = Field(default_factory=LearnerSection)
    pti: Optional[PtiSection] = None
    destabilize: DestabilizeSection = Field(default_factory=DestabilizeSection)
    guidance: GuidanceSection = Field(default_factory=GuidanceSection)

    @model_validator(mode="after")
    def _one_plant(self):
        if (self.plant is None) == (self.aircraft is None):
            raise ValueError("exactly one of [plant] and [aircraft] is required")
        return self

    @property
    def is_aircraft(self) -> bool:
        return self.aircraft is not None


def config_hash(config: ScenarioConfig) -> str:
    """SHA-256 of the canonical JSON dump"""
    canonical = json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def parse_scenario(text: str, source: str = "<string>") -> ScenarioConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError("{}: malformed TOML: {}".format(source, exc)) from exc
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as exc:
        raise ScenarioError("{}: {}".format(source, exc)) from exc


def load_scenario(path) -> ScenarioConfig:
    """Read and validate a scenario file

    :raises ScenarioError: If the file is missing, malformed or invalid
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError("cannot read scenario {}: {}".format(path, exc.strerror or exc)) from exc
    return parse_scenario(text, str(path))


# Builders

def _matrix(value, name, row: bool = False) -> np.ndarray:
    """Scalars become 1 x 1, flat lists a column (or a row with ``row``)"""
    array = np.array(value, dtype=float)
    if array.ndim == 0:
        array = array.reshape(1, 1)
    elif array.ndim == 1:
        array = array.reshape(1, -1) if row else array.reshape(-1, 1)
    if array.ndim != 2:
        raise ScenarioError("{} must be a matrix".format(name))
    return array


def build_modes(config: ScenarioConfig) -> ModeSet:
    modes = []
    for index, mode in enumerate(config.plant.modes):
        try:
            modes.append(ModeDefinition(_matrix(mode.A, "A"), _matrix(mode.B, "B"),
                                        _matrix(mode.C, "C", row=True), _matrix(mode.k, "k")))
        except DwellError as exc:
            raise ScenarioError("plant.modes[{}]: {}".format(index, exc)) from exc
    try:
        return ModeSet(tuple(modes))
    except DwellError as exc:
        raise ScenarioError("plant: {}".format(exc)) from exc


def build_sets(config: ScenarioConfig, n: int, m: int) -> UncertaintySets:
    section = config.uncertainty
    theta = [np.array(v, dtype=float).reshape(n, m) for v in section.theta_vertices] or [np.zeros((n, m))]
    d = [np.array(v, dtype=float).reshape(m) for v in section.d_vertices] or [np.zeros(m)]
    omega = [np.array(v, dtype=float).reshape(m, m) for v in section.omega_vertices] or [np.eye(m)]
    try:
        return UncertaintySets(tuple(theta), tuple(d), tuple(omega))
    except (DwellError, ValueError) as exc:
        raise ScenarioError("uncertainty: {}".format(exc)) from exc


def build_shape(section: ShapeSection, horizon: float):
    if section.kind == "constant":
        return ConstantShape(section.level)
    if section.kind == "sine":
        return SinusoidShape(section.frequency, section.phase)
    if section.kind == "ramp":
        return RampHoldShape(section.start, section.duration)
    if section.kind == "noise":
        rng = np.random.default_rng(section.seed)
        return FilteredNoiseShape.generate(rng, max(horizon, 0.1), section.bandwidth, section.intensity)
    raise ScenarioError("unknown trajectory shape {!r}".format(section.kind))


def _path(section: PathSection, count: int, horizon: float) -> VertexPath:
    start = vertex_weights(count, section.start)
    end = start if section.end is None else vertex_weights(count, section.end)
    return VertexPath(start, end, build_shape(section.shape, horizon))


def build_trajectory(config: ScenarioConfig, sets: UncertaintySets, n_modes: int) -> UncertaintyTrajectory:
    section = config.uncertainty.trajectory
    horizon = config.schedule.horizon
    per_mode = section.omega_per_mode or [section.omega] * n_modes
    if len(per_mode) != n_modes:
        raise ScenarioError("omega_per_mode needs {} entries".format(n_modes))
    try:
        return UncertaintyTrajectory(
            sets,
            _path(section.theta, len(sets.theta_vertices), horizon),
            _path(section.d, len(sets.d_vertices), horizon),
            tuple(vertex_weights(len(sets.omega_vertices), item) for item in per_mode),
        )
    except DwellError as exc:
        raise ScenarioError("trajectory: {}".format(exc)) from exc


def build_filter(config: ScenarioConfig, m: int) -> FilterRealization:
    section = config.controller.filter
    try:
        if section.gain is not None:
            return FilterRealization.constant(section.gain, m)
        return FilterRealization(section.A_f, section.B_f, section.C_f, section.D_f)
    except DwellError as exc:
        raise ScenarioError("controller.filter: {}".format(exc)) from exc


def build_controller(config: ScenarioConfig, m: int) -> L1Config:
    section = config.controller
    try:
        return L1Config(section.Ts, build_filter(config, m), section.reinit_policy,
                        section.noise_sigma, section.zoh_control_rate)
    except DimensionError as exc:
        raise ScenarioError("controller: {}".format(exc)) from exc


def build_schedule(config: ScenarioConfig) -> Schedule:
    section = config.schedule
    Ts = config.controller.Ts
    try:
        if section.h is None:
            return Schedule.default(Ts, section.horizon, control_rate=section.control_rate,
                                    model_rate=section.model_rate)
        return Schedule(section.h, Ts, section.horizon, section.control_rate, section.model_rate)
    except DimensionError as exc:
        raise ScenarioError("schedule: {}".format(exc)) from exc


def build_command(config: ScenarioConfig, m: int) -> CommandSignal:
    section = config.reference
    amplitude = np.array(section.amplitude, dtype=float).reshape(-1)
    if amplitude.shape[0] == 1 and m > 1:
        amplitude = np.full(m, amplitude[0])
    if amplitude.shape[0] != m:
        raise ScenarioError("reference amplitude needs {} entries".format(m))
    return CommandSignal(section.kind, amplitude, section.start, section.frequency, section.width)


def build_signal(config: ScenarioConfig) -> SwitchingSignal:
    return SwitchingSignal(tuple((float(t), int(mode)) for t, mode in config.schedule.switches))


def build_linear(config: ScenarioConfig) -> LinearScenario:
    """Linear plant scenario, structural violations are config errors

    :raises ScenarioError: On any structural violation
    """
    if config.plant is None:
        raise ScenarioError("scenario has no [plant] section")
    modes = build_modes(config)
    n, m = modes.n, modes.m
    sets = build_sets(config, n, m)
    signal = build_signal(config)
    trajectory = build_trajectory(config, sets, len(modes))
    violations = validate_scenario(modes, sets, signal, config.controller.Ts, trajectory=trajectory,
                                   horizon=config.schedule.horizon)
    if violations:
        raise ScenarioError("; ".join(violations))
    x0 = np.array(config.plant.x0, dtype=float).reshape(-1)
    if x0.shape[0] == 1 and n > 1:
        x0 = np.full(n, x0[0])
    if x0.shape[0] != n:
        raise ScenarioError("plant.x0 needs {} entries".format(n))
    offset = None
    if config.controller.reinit_offset is not None:
        offset = np.array(config.controller.reinit_offset, dtype=float).reshape(n)
    schedule = build_schedule(config)
    for t in signal.switch_times:
        try:
            schedule.step_of(t)
        except DimensionError as exc:
            raise ScenarioError("schedule: {}".format(exc)) from exc
    return LinearScenario(
        modes=modes,
        sets=sets,
        trajectory=trajectory,
        signal=signal,
        command=build_command(config, m),
        controller=build_controller(config, m),
        x0=x0,
        schedule=schedule,
        measurement_sigma=config.controller.measurement_sigma,
        reinit_offset=offset,
    )


def certificate_settings(config: ScenarioConfig, strict: Optional[bool] = None) -> CertificateSettings:
    section = config.certificates
    return CertificateSettings(
        a_star=section.a_star,
        a=section.a,
        delta0=section.delta0,
        strict_norm_bounds=section.strict_norm_bounds if strict is None else strict,
        nu_floor=section.nu_floor,
        rho_margin=section.rho_margin,
    )


def build_flight(config: ScenarioConfig):
    """Aircraft scenario

    :raises ScenarioError: If the sections do not describe a valid flight
    """
    # imported here so linear scenarios never load the aircraft package
    from .l2f import aircraft, flight, pti

    if config.aircraft is None:
        raise ScenarioError("scenario has no [aircraft] section")
    section = config.aircraft
    try:
        aero = aircraft.AeroCoefficients(**section.aero)
    except TypeError as exc:
        raise ScenarioError("aircraft.aero: {}".format(exc)) from exc
    try:
        params = aircraft.AircraftParams(section.mass, _matrix(section.inertia, "inertia"), section.S,
                                         section.b, section.cbar, aero=aero)
        initial = aircraft.AircraftState.trimmed(params, section.qbar, section.gamma0)
        controller = build_controller(config, 3) if config.controller.enabled else None
        destabilize = config.destabilize
        pitch_gain = destabilize.pitch_alpha_gain
        if destabilize.pitch_static_margin is not None:
            pitch_gain = flight.pitch_gain_for_static_margin(params, destabilize.pitch_static_margin)
        roll_gain = destabilize.roll_rate_gain
        if destabilize.roll_neutral:
            roll_gain = flight.roll_neutral_gain(params, initial.V)
        guidance = config.guidance
        command = CommandSignal(guidance.kind, np.array(guidance.amplitude, dtype=float), guidance.start,
                                guidance.frequency, guidance.width)
        excitation = None
        if config.pti is not None and config.pti.enabled:
            if config.pti.harmonics is not None:
                excitation = pti.PtiConfig(config.pti.base_period, config.pti.harmonics,
                                           {name: config.pti.amplitude for name in config.pti.harmonics},
                                           config.pti.start)
            else:
                excitation = replace(pti.PtiConfig.interleaved(config.pti.base_period, config.pti.count,
                                                               config.pti.amplitude), start=config.pti.start)
        learner = config.learner
        return flight.FlightScenario(
            params=params,
            initial=initial,
            schedule=build_schedule(config),
            controller=controller,
            guidance=flight.Guidance(guidance.mode, command, guidance.beta_cmd),
            pti=excitation,
            destabilize=flight.DestabilizeConfig(pitch_gain, roll_gain, initial.alpha),
            learner=flight.LearnerSettings(learner.enabled, learner.p0, learner.forgetting, learner.prior),
            publish=flight.PublishSettings(learner.publish_threshold, learner.trust, learner.tau_d,
                                           config.certificates.a_star, guidance.zeta, guidance.omega_floor,
                                           guidance.K_chi),
            truth_model=section.truth_model,
        )
    except DwellError as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError("aircraft: {}".format(exc)) from exc


def parse_ts_sweep(text: str) -> np.ndarray:
    """``lo:hi:n`` to n sampling times, a single value gives one point"""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            return np.array([float(parts[0])])
        low, high, count = float(parts[0]), float(parts[1]), int(parts[2])
    except (ValueError, IndexError) as exc:
        raise ScenarioError("bad Ts sweep {!r}, expected lo:hi:n".format(text)) from exc
    if count < 1 or low <= 0 or high < low or not math.isfinite(high):
        raise ScenarioError("bad Ts sweep {!r}".format(text))
    return np.linspace(low, high, count)


def build_inner_loop(config: ScenarioConfig) -> LinearScenario:
    """Linearized L1 rate loop of an aircraft scenario

    One mode omega' = -K_omega omega + K_omega omega_cmd with the rate gains
    of the initial model, uncertainty from the [uncertainty] section.
    """
    # pylint: disable=import-outside-toplevel
    from .l2f.flight import inner_loop_mode
    from .l2f.ndi import gains_from_model

    flight = build_flight(config)
    publish = flight.publish
    gains = gains_from_model(flight.flying_model().gain_coefficients, config.aircraft.qbar, flight.params,
                             publish.zeta, publish.omega_floor, publish.K_chi)
    modes = ModeSet((inner_loop_mode(gains.K_omega),))
    sets = build_sets(config, 3, 3)
    signal = SwitchingSignal(((0.0, 0),))
    trajectory = build_trajectory(config, sets, 1)
    violations = validate_scenario(modes, sets, signal, config.controller.Ts, trajectory=trajectory,
                                   horizon=config.schedule.horizon)
    if violations:
        raise ScenarioError("; ".join(violations))
    return LinearScenario(
        modes=modes,
        sets=sets,
        trajectory=trajectory,
        signal=signal,
        command=build_command(config, 3),
        controller=build_controller(config, 3),
        x0=flight.initial.omega,
        schedule=build_schedule(config),
    )


def build_certified(config: ScenarioConfig) -> LinearScenario:
    """The linear system a certificate is computed for"""
    return build_inner_loop(config) if config.is_aircraft else build_linear(config)
