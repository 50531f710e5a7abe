"""Learn-to-Fly flight simulation

Couples the aircraft truth model, the NDI baseline, the optional L1 rate
loop augmentation, the PTI excitation, the destabilizing feedback and the
model learner on one fixed step clock. Learned models are published at the
model rate; a publish that changes the rate gains enough, after the dwell
time, becomes a mode switch of the L1 inner loop.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.optimize import least_squares

from ..certificates import dwell_time, find_mode_lyapunov
from ..controller import L1Config, L1Controller
from ..exceptions import DimensionError, EnvelopeViolation
from ..integrate import rk4_step
from ..logger import logger
from ..model import CommandSignal, ModeDefinition, ModeSet
from ..sim import Schedule
from ..trace import Trace, vector_columns
from .aircraft import (AircraftParams, AircraftState, ThrottleLoop,
                       aero_moments, aircraft_deriv, check_envelope,
                       full_deriv, regressors, saturate_surfaces)
from .learner import LearnedModel, observed_coefficients, rls_update_all
from .ndi import (DEFAULT_ZETA, OMEGA_FLOOR, NdiGains, allocate,
                  gains_from_model, ndi_middle, ndi_outer, ndi_inner_augmented)
from .pti import PtiConfig, pti_multisine

TRUTH_SIMPLIFIED = "simplified"
TRUTH_FULL = "full"
GUIDANCE_TRACK = "track"
GUIDANCE_ATTITUDE = "attitude"
PUBLISH_THRESHOLD = 0.02

N_AIRCRAFT = len(AircraftState.names())


# Destabilization

@dataclass(frozen=True)
class DestabilizeConfig:
    """Hidden feedback loops

    :ivar pitch_alpha_gain: Half elevator deflection per rad of alpha - alpha0
    :ivar roll_rate_gain: Inboard flap deflection per rad/s of roll rate
    :ivar alpha0: Reference angle of attack of the pitch feedback
    """
    pitch_alpha_gain: float = 0.0
    roll_rate_gain: float = 0.0
    alpha0: float = 0.0


def pitch_gain_for_static_margin(params: AircraftParams, static_margin: float) -> float:
    """Alpha feedback gain giving the requested (signed) static margin

    The effective pitch stiffness is C_m_alpha + C_m_dh K and the static
    margin is -C_m_alpha_eff / C_L_alpha.
    """
    aero = params.aero
    return (-static_margin * aero.CL_alpha - aero.Cm_alpha) / aero.Cm_dh


def effective_static_margin(params: AircraftParams, pitch_gain: float) -> float:
    aero = params.aero
    return -(aero.Cm_alpha + aero.Cm_dh * pitch_gain) / aero.CL_alpha


def roll_neutral_gain(params: AircraftParams, V: float) -> float:
    """Roll rate feedback that cancels the airframe roll damping"""
    aero = params.aero
    return -aero.Cl_p * params.b / (2.0 * V * aero.Cl_df)


def roll_subsidence(params: AircraftParams, V: float, roll_gain: float) -> float:
    """Eigenvalue of the linearized roll rate dynamics"""
    aero = params.aero
    damping = aero.Cl_p * params.b / (2.0 * V) + aero.Cl_df * roll_gain
    return params.qbar(V) * params.S * params.b / params.inertia[0, 0] * damping


def destabilize_feedback(state: AircraftState, config: DestabilizeConfig) -> np.ndarray:
    """Hidden deflections (delta_h, delta_f)"""
    return np.array([
        config.pitch_alpha_gain * (state.alpha - config.alpha0),
        config.roll_rate_gain * state.p,
    ])


# Model publishing

def inner_loop_mode(K_omega) -> ModeDefinition:
    """Desired rate dynamics omega' = -K_omega omega + K_omega omega_cmd"""
    K_omega = np.asarray(K_omega, dtype=float)
    return ModeDefinition(-K_omega, np.eye(3), np.eye(3), K_omega)


@dataclass(frozen=True)
class PublishSettings:
    """Gain scheduling from the learned model

    :ivar threshold: Relative rate gain change that triggers a switch
    :ivar trust: Variance below which learned coefficients are used
    :ivar tau_d: Fixed dwell time, computed per candidate switch if None
    :ivar a_star: Contraction split of the computed dwell time
    """
    threshold: float = PUBLISH_THRESHOLD
    trust: float = 1e-2
    tau_d: Optional[float] = None
    a_star: float = 0.5
    zeta: float = DEFAULT_ZETA
    omega_floor: float = OMEGA_FLOOR
    K_chi: float = 0.5


def switch_dwell_time(current: ModeDefinition, candidate: ModeDefinition, a_star: float) -> float:
    """Dwell time certified for the pair of inner loop modes"""
    result = find_mode_lyapunov(ModeSet((current, candidate)))
    if not result.feasible:
        return math.inf
    return dwell_time(result.lam, result.mu, a_star)


@dataclass(frozen=True, eq=False)
class PublishEvent:
    """Outcome of one publish

    :ivar gains: Gains in force after the publish
    :ivar switched: Whether the rate gains changed (a mode switch)
    :ivar tau_d: Dwell time the switch was checked against
    :ivar change: Relative rate gain change of the candidate
    """
    t: float
    gains: NdiGains
    switched: bool
    tau_d: float
    change: float


# pylint: disable=too-many-arguments
def model_publish(model: LearnedModel, t: float, current: NdiGains, last_switch: float,
                  qbar: float, params: AircraftParams, Ts: float,
                  settings: PublishSettings = PublishSettings()) -> PublishEvent:
    """Publish the learned model

    The angle gains follow every trusted publish, the rate gains only change
    when the dwell time since the last switch has passed and the relative
    change exceeds the threshold.

    :raises DimensionError: If t is not a multiple of Ts
    """
    ratio = t / Ts
    if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
        raise DimensionError("publish at t={} is not aligned to Ts={}".format(t, Ts))
    if not model.trusted(settings.trust):
        return PublishEvent(t, current, False, math.nan, 0.0)
    candidate = gains_from_model(model.gain_coefficients, qbar, params, settings.zeta,
                                 settings.omega_floor, settings.K_chi)
    change = current.relative_change(candidate)
    if change <= settings.threshold:
        outer = NdiGains(candidate.K_chi, candidate.K_phi, candidate.K_theta, candidate.K_beta,
                         current.K_omega, current.omega_n, current.zeta, candidate.flags)
        return PublishEvent(t, outer, False, math.nan, change)
    if settings.tau_d is not None:
        tau_d = settings.tau_d
    else:
        tau_d = switch_dwell_time(inner_loop_mode(current.K_omega), inner_loop_mode(candidate.K_omega),
                                  settings.a_star)
    if t - last_switch < tau_d - 1e-9:
        outer = NdiGains(candidate.K_chi, candidate.K_phi, candidate.K_theta, candidate.K_beta,
                         current.K_omega, current.omega_n, current.zeta, candidate.flags)
        return PublishEvent(t, outer, False, tau_d, change)
    logger.info("Gains published at t=%.2f, rate gain change %.1f%%", t, 100.0 * change)
    return PublishEvent(t, candidate, True, tau_d, change)


# Flight scenario

@dataclass(frozen=True, eq=False)
class Guidance:
    """Guidance commands

    In track mode the command holds (chi, gamma) offsets from the initial
    state, in attitude mode (phi, theta) offsets.
    """
    mode: str = GUIDANCE_TRACK
    command: CommandSignal = field(default_factory=lambda: CommandSignal("constant", np.zeros(2)))
    beta_cmd: float = 0.0

    def __post_init__(self):
        if self.mode not in (GUIDANCE_TRACK, GUIDANCE_ATTITUDE):
            raise DimensionError("unknown guidance mode {!r}".format(self.mode))
        if self.command.amplitude.shape != (2,):
            raise DimensionError("guidance commands have two components")


@dataclass(frozen=True)
class LearnerSettings:
    """:ivar prior: ``airframe`` starts from the bare airframe model, ``empty`` from zero"""
    enabled: bool = True
    p0: float = 1e6
    forgetting: float = 1.0
    prior: str = "airframe"


# pylint: disable=too-many-instance-attributes
@dataclass(frozen=True, eq=False)
class FlightScenario:
    params: AircraftParams
    initial: AircraftState
    schedule: Schedule
    controller: Optional[L1Config] = None
    guidance: Guidance = field(default_factory=Guidance)
    pti: Optional[PtiConfig] = None
    destabilize: DestabilizeConfig = field(default_factory=DestabilizeConfig)
    learner: LearnerSettings = field(default_factory=LearnerSettings)
    publish: PublishSettings = field(default_factory=PublishSettings)
    truth_model: str = TRUTH_SIMPLIFIED

    def __post_init__(self):
        if self.truth_model not in (TRUTH_SIMPLIFIED, TRUTH_FULL):
            raise DimensionError("unknown truth model {!r}".format(self.truth_model))
        if self.controller is not None and self.controller.filter.m != 3:
            raise DimensionError("the rate loop filter must have three channels")

    def initial_model(self) -> LearnedModel:
        if self.learner.prior == "empty":
            return LearnedModel.empty(self.learner.p0, self.learner.forgetting)
        return LearnedModel.from_truth(self.params, self.learner.p0, self.learner.forgetting)

    def flying_model(self) -> LearnedModel:
        """Model the allocation and the gains use until a learned one is trusted

        An empty prior has no control derivatives, so the flight starts on
        the airframe model whatever the learner starts from.
        """
        return LearnedModel.from_truth(self.params, self.learner.p0, self.learner.forgetting)


def flight_columns() -> list:
    columns = ["t"] + list(AircraftState.names())
    columns += ["chi_cmd", "gamma_cmd", "phi_cmd", "theta_cmd"]
    columns += vector_columns("omega_cmd", 3)
    columns += ["delta_a", "delta_e", "delta_r", "delta_h", "delta_f"]
    for prefix in ("pti", "xhat", "eta1", "u", "xtilde", "omega_n", "K_omega"):
        columns += vector_columns(prefix, 3)
    columns += ["Cl_da", "Cm_alpha", "Cn_beta", "Cl_da_learned", "Cm_alpha_learned", "Cn_beta_learned"]
    columns += ["mode", "switch", "publish", "gamma_clamped", "tau_d"]
    return columns


# pylint: disable=too-many-locals, too-many-statements, too-many-branches
def run_flight(scenario: FlightScenario, seed: Optional[int] = None) -> Trace:
    """Simulate one flight

    The L1 augmentation runs when ``scenario.controller`` is set, otherwise
    the baseline NDI flies alone with u = K_omega omega_cmd.

    :raises EnvelopeViolation: With the trace up to the last good step
    """
    del seed  # the flight has no random inputs, kept for a uniform signature
    params, schedule = scenario.params, scenario.schedule
    full = scenario.truth_model == TRUTH_FULL
    config = scenario.controller
    n_f = config.filter.n_f if config is not None else 0

    live = scenario.initial_model()
    published = scenario.flying_model()
    gains = gains_from_model(published.gain_coefficients, params.qbar(scenario.initial.V), params,
                             scenario.publish.zeta, scenario.publish.omega_floor, scenario.publish.K_chi)
    mode = inner_loop_mode(gains.K_omega)
    mode_index = 0
    last_switch = 0.0
    tau_d = math.nan
    throttle = ThrottleLoop.trimmed(params, scenario.initial)

    offset = 11
    y = np.zeros(offset + 6 + n_f)
    y[:N_AIRCRAFT] = scenario.initial.to_vector()
    controller = None
    if config is not None:
        controller = L1Controller.create(config, mode, scenario.initial.omega)
        y[offset:offset + 3] = scenario.initial.omega
    sl_xhat = slice(offset, offset + 3)
    sl_uint = slice(offset + 3, offset + 6)
    sl_xf = slice(offset + 6, offset + 6 + n_f)

    sample_every = schedule.sample_every
    publish_every = schedule.every(schedule.model_rate)
    if publish_every % sample_every:
        raise DimensionError("the model period must be a multiple of Ts")
    initial = scenario.initial
    trace = Trace(flight_columns())

    def commands(t, state):
        r = scenario.guidance.command(t)
        if scenario.guidance.mode == GUIDANCE_TRACK:
            chi_cmd, gamma_cmd = initial.chi + r[0], initial.gamma + r[1]
            phi_cmd, theta_cmd, clamped = ndi_outer(chi_cmd, gamma_cmd, state, gains.K_chi, params.g)
        else:
            chi_cmd, gamma_cmd, clamped = math.nan, math.nan, False
            phi_cmd, theta_cmd = initial.phi + r[0], initial.theta + r[1]
        omega_cmd = ndi_middle(phi_cmd, theta_cmd, scenario.guidance.beta_cmd, state, gains, params.g)
        return (chi_cmd, gamma_cmd, phi_cmd, theta_cmd, clamped), omega_cmd

    def evaluate(t, vector, omega_cmd, details=None):
        state = AircraftState.from_vector(vector[:N_AIRCRAFT])
        check_envelope(state)
        derivative = np.zeros_like(vector)
        if controller is not None:
            xhat_dot, u_int_dot, x_f_dot = controller.derivatives(
                mode, vector[sl_xhat], vector[sl_uint], vector[sl_xf], omega_cmd)
            u = -vector[sl_uint]
            derivative[sl_xhat] = xhat_dot
            derivative[sl_uint] = u_int_dot
            derivative[sl_xf] = x_f_dot
        else:
            u = gains.K_omega @ omega_cmd
        qbar = params.qbar(state.V)
        M_hat = published.moment_estimate(state, params)
        M_delta = ndi_inner_augmented(u, state.omega, M_hat, params.inertia, gains.K_omega)
        visible = allocate(M_delta, qbar, params, published.control_derivatives)
        excitation = pti_multisine(t, scenario.pti) if scenario.pti is not None else np.zeros(3)
        surfaces = saturate_surfaces(visible + excitation)
        hidden = destabilize_feedback(state, scenario.destabilize)
        moments = aero_moments(state, surfaces, hidden, params)
        if full:
            thrust = throttle.thrust(state.V, vector[N_AIRCRAFT])
            derivative[:N_AIRCRAFT] = full_deriv(state, moments, params, thrust).to_vector()
            derivative[N_AIRCRAFT] = throttle.integral_rate(state.V)
        else:
            derivative[:N_AIRCRAFT] = aircraft_deriv(state, moments, params).to_vector()
        if details is not None:
            details.update(state=state, u=u, surfaces=surfaces, hidden=hidden, excitation=excitation,
                           omega_dot=derivative[3:6].copy())
        return derivative

    for step in range(schedule.n_steps + 1):
        t = step * schedule.h
        published_now = switched = 0.0
        try:
            if step > 0 and step % publish_every == 0 and scenario.learner.enabled:
                event = model_publish(live, t, gains, last_switch, params.qbar(y[0]), params,
                                      schedule.Ts, scenario.publish)
                if live.trusted(scenario.publish.trust):
                    published = live
                gains = event.gains
                published_now = 1.0
                if event.switched:
                    mode = inner_loop_mode(gains.K_omega)
                    mode_index += 1
                    last_switch = t
                    tau_d = event.tau_d
                    switched = 1.0
                    if controller is not None:
                        controller.state.xhat = y[sl_xhat].copy()
                        controller.switch(mode, y[3:6])
                        y[sl_xhat] = controller.state.xhat
                    if tau_d > 1.0 / schedule.model_rate:
                        logger.info("Dwell time %.3f s exceeds the publish period", tau_d)
            if controller is not None and step % sample_every == 0:
                controller.state.xhat = y[sl_xhat].copy()
                controller.sample(t, mode, y[3:6])

            state = AircraftState.from_vector(y[:N_AIRCRAFT])
            check_envelope(state)
            (chi_cmd, gamma_cmd, phi_cmd, theta_cmd, clamped), omega_cmd = commands(t, state)
            details: Dict[str, object] = {}
            evaluate(t, y, omega_cmd, details)
        except EnvelopeViolation as exc:
            logger.error("Flight aborted at t=%.3f: %s", t, exc.diagnostic)
            raise EnvelopeViolation(exc.diagnostic, trace) from exc

        if scenario.learner.enabled:
            phi = regressors(state, details["surfaces"], params)
            live = rls_update_all(live, phi, observed_coefficients(state, details["omega_dot"], params))

        xhat = y[sl_xhat] if controller is not None else state.omega
        eta1 = controller.state.eta1 if controller is not None else np.zeros(3)
        record = {
            "t": t, "chi_cmd": chi_cmd, "gamma_cmd": gamma_cmd, "phi_cmd": phi_cmd, "theta_cmd": theta_cmd,
            "omega_cmd": omega_cmd,
            "delta_a": details["surfaces"][0], "delta_e": details["surfaces"][1], "delta_r": details["surfaces"][2],
            "delta_h": details["hidden"][0], "delta_f": details["hidden"][1],
            "pti": details["excitation"], "xhat": xhat, "eta1": eta1, "u": details["u"],
            "xtilde": xhat - state.omega, "omega_n": gains.omega_n, "K_omega": np.diag(gains.K_omega),
            "Cl_da": published.gain_coefficients[0], "Cm_alpha": published.gain_coefficients[1],
            "Cn_beta": published.gain_coefficients[2],
            "Cl_da_learned": live.gain_coefficients[0], "Cm_alpha_learned": live.gain_coefficients[1],
            "Cn_beta_learned": live.gain_coefficients[2],
            "mode": mode_index, "switch": switched, "publish": published_now,
            "gamma_clamped": float(clamped), "tau_d": tau_d,
        }
        record.update(zip(AircraftState.names(), state.to_vector()))
        trace.append(record)
        if step == schedule.n_steps:
            break

        try:
            y = rk4_step(lambda t_stage, vector: evaluate(t_stage, vector, omega_cmd), t, y, schedule.h)
        except EnvelopeViolation as exc:
            logger.error("Flight aborted after t=%.3f: %s", t, exc.diagnostic)
            raise EnvelopeViolation(exc.diagnostic, trace) from exc
        if not np.all(np.isfinite(y)):
            raise EnvelopeViolation("non finite state after t={:.4g}".format(t), trace)
    return trace


def _window(trace: Trace, start: float, end: float) -> np.ndarray:
    t = trace.column("t")
    return (t >= start - 1e-12) & (t <= end + 1e-12)


def flight_observables(trace: Trace, window: float = 5.0) -> Dict[str, float]:
    """Pitch excursion over the first window and the adaptive input RMS over the first and last windows"""
    t = trace.column("t")
    end = float(t[-1]) if len(t) else 0.0
    first = _window(trace, 0.0, window)
    last = _window(trace, max(0.0, end - window), end)
    pitch_error = np.abs(trace.column("theta") - trace.column("theta_cmd"))
    eta1 = np.linalg.norm(trace.block("eta1"), axis=1)
    return {
        "duration": end,
        "pitch_excursion": float(np.max(pitch_error[first])) if np.any(first) else 0.0,
        "pitch_excursion_total": float(np.max(pitch_error)) if len(t) else 0.0,
        "eta1_rms_first": float(np.sqrt(np.mean(eta1[first] ** 2))) if np.any(first) else 0.0,
        "eta1_rms_last": float(np.sqrt(np.mean(eta1[last] ** 2))) if np.any(last) else 0.0,
        "publishes": int(np.sum(trace.column("publish"))),
        "switches": int(np.sum(trace.column("switch"))),
    }


def second_order_step(t, omega_n: float, zeta: float) -> np.ndarray:
    """Unit step response of omega_n^2 / (s^2 + 2 zeta omega_n s + omega_n^2), zeta < 1"""
    t = np.asarray(t, dtype=float)
    omega_d = omega_n * math.sqrt(1.0 - zeta * zeta)
    envelope = np.exp(-zeta * omega_n * t)
    return 1.0 - envelope * (np.cos(omega_d * t) + zeta / math.sqrt(1.0 - zeta * zeta) * np.sin(omega_d * t))


def identify_second_order(t, response, step: float, guess: Tuple[float, float] = (5.0, 0.7)) -> Tuple[float, float]:
    """Fit (omega_n, zeta) of a second order step response by least squares"""
    t = np.asarray(t, dtype=float)
    normalized = np.asarray(response, dtype=float) / step

    def residual(parameters):
        return second_order_step(t, parameters[0], parameters[1]) - normalized

    result = least_squares(residual, np.asarray(guess, dtype=float), bounds=([0.01, 0.05], [200.0, 0.99]))
    return float(result.x[0]), float(result.x[1])
