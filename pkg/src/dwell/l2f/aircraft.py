"""Aircraft truth model

Synthetic small fixed wing vehicle (mass 10 kg, 1.7 m span) trimmed at a
dynamic pressure of 500 Pa. The aerodynamic model is linear in the
non-dimensional regressors; two hidden surfaces (half elevator, inboard
flaps) carry the destabilizing feedback and are not part of any regressor.
"""

import math
from dataclasses import dataclass, field, fields, replace
from typing import Tuple

import numpy as np

from ..exceptions import DimensionError, EnvelopeViolation
from ..linalg import check_spd

AIR_DENSITY = 1.225
GRAVITY = 9.81

# order of the visible surfaces in every surface vector
SURFACES = ("delta_a", "delta_e", "delta_r")
SURFACE_LIMIT = math.radians(25.0)


@dataclass(frozen=True)
class AeroCoefficients:
    """Non-dimensional stability and control derivatives

    Rates are normalized as p b / 2V, q cbar / 2V, r b / 2V.
    """
    CL0: float = 0.1674
    CL_alpha: float = 4.5
    CY_beta: float = -0.4
    CD0: float = 0.03
    CD_k: float = 0.05

    Cl_beta: float = -0.05
    Cl_p: float = -0.45
    Cl_r: float = 0.1
    Cl_da: float = 0.15
    Cl_dr: float = 0.005
    Cl_df: float = 0.08

    Cm0: float = 0.04
    Cm_alpha: float = -0.8
    Cm_q: float = -8.0
    Cm_de: float = -1.2
    Cm_dh: float = -0.6

    Cn_beta: float = 0.06
    Cn_p: float = -0.02
    Cn_r: float = -0.1
    Cn_da: float = -0.005
    Cn_dr: float = -0.05

    def regression_matrix(self) -> np.ndarray:
        """Rows (C_l, C_m, C_n) over the regressors [1, alpha, beta, p, q, r, da, de, dr]"""
        return np.array([
            [0.0, 0.0, self.Cl_beta, self.Cl_p, 0.0, self.Cl_r, self.Cl_da, 0.0, self.Cl_dr],
            [self.Cm0, self.Cm_alpha, 0.0, 0.0, self.Cm_q, 0.0, 0.0, self.Cm_de, 0.0],
            [0.0, 0.0, self.Cn_beta, self.Cn_p, 0.0, self.Cn_r, self.Cn_da, 0.0, self.Cn_dr],
        ])


@dataclass(frozen=True, eq=False)
class AircraftParams:
    """Mass, geometry and aerodynamics of the vehicle

    :ivar mass: kg
    :ivar inertia: 3x3 inertia matrix, kg m^2
    :ivar S: Wing area, m^2
    :ivar b: Span, m
    :ivar cbar: Mean chord, m
    :ivar g: Gravity, m/s^2
    :ivar rho: Air density, kg/m^3
    :ivar aero: The true coefficients
    """
    mass: float = 10.0
    inertia: np.ndarray = field(default_factory=lambda: np.diag([0.8, 1.2, 1.8]))
    S: float = 0.5
    b: float = 1.7
    cbar: float = 0.3
    g: float = GRAVITY
    rho: float = AIR_DENSITY
    aero: AeroCoefficients = field(default_factory=AeroCoefficients)

    def __post_init__(self):
        inertia = np.array(self.inertia, dtype=float)
        if inertia.shape != (3, 3):
            raise DimensionError("inertia must be 3x3")
        check_spd(inertia, "inertia")
        if min(self.mass, self.S, self.b, self.cbar, self.g, self.rho) <= 0:
            raise DimensionError("mass, geometry, gravity and density must be positive")
        object.__setattr__(self, "inertia", inertia)

    @property
    def lengths(self) -> np.ndarray:
        """Reference lengths of the roll, pitch and yaw moments"""
        return np.array([self.b, self.cbar, self.b])

    def qbar(self, V: float) -> float:
        return 0.5 * self.rho * V * V

    def airspeed(self, qbar: float) -> float:
        return math.sqrt(2.0 * qbar / self.rho)

    @property
    def alpha_trim(self) -> float:
        """Angle of attack with zero elevator and zero pitching moment"""
        return -self.aero.Cm0 / self.aero.Cm_alpha


@dataclass(frozen=True)
class AircraftState:
    """Aircraft state in wind and body axes

    :ivar V: Airspeed, m/s
    :ivar alpha: Angle of attack, rad
    :ivar beta: Sideslip, rad
    :ivar p: Roll rate, rad/s
    :ivar q: Pitch rate, rad/s
    :ivar r: Yaw rate, rad/s
    :ivar phi: Bank angle, rad
    :ivar theta: Pitch angle, rad
    :ivar chi: Ground track, rad
    :ivar gamma: Flight path angle, rad
    """
    V: float
    alpha: float = 0.0
    beta: float = 0.0
    p: float = 0.0
    q: float = 0.0
    r: float = 0.0
    phi: float = 0.0
    theta: float = 0.0
    chi: float = 0.0
    gamma: float = 0.0

    @classmethod
    def names(cls) -> Tuple[str, ...]:
        return tuple(f.name for f in fields(cls))

    @classmethod
    def from_vector(cls, vector) -> "AircraftState":
        return cls(*(float(value) for value in vector))

    @classmethod
    def trimmed(cls, params: AircraftParams, qbar: float, gamma: float = 0.0) -> "AircraftState":
        """Wings level trim at zero elevator"""
        alpha = params.alpha_trim
        return cls(V=params.airspeed(qbar), alpha=alpha, theta=alpha + gamma, gamma=gamma)

    def to_vector(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in self.names()])

    @property
    def omega(self) -> np.ndarray:
        return np.array([self.p, self.q, self.r])

    def with_omega(self, omega) -> "AircraftState":
        return replace(self, p=float(omega[0]), q=float(omega[1]), r=float(omega[2]))


def check_envelope(state: AircraftState) -> None:
    """Abort outside the valid envelope

    :raises EnvelopeViolation: On |phi| or |theta| >= 90 deg, V <= 0 or non finite values
    """
    vector = state.to_vector()
    if not np.all(np.isfinite(vector)):
        raise EnvelopeViolation("non finite aircraft state")
    if state.V <= 0:
        raise EnvelopeViolation("airspeed {:.4g} m/s is not positive".format(state.V))
    if abs(state.phi) >= math.pi / 2:
        raise EnvelopeViolation("bank angle {:.1f} deg outside the envelope".format(math.degrees(state.phi)))
    if abs(state.theta) >= math.pi / 2:
        raise EnvelopeViolation("pitch angle {:.1f} deg outside the envelope".format(math.degrees(state.theta)))


def regressors(state: AircraftState, surfaces, params: AircraftParams) -> np.ndarray:
    """[1, alpha, beta, p b/2V, q cbar/2V, r b/2V, delta_a, delta_e, delta_r]"""
    surfaces = np.asarray(surfaces, dtype=float)
    scale = 0.5 / state.V
    return np.array([
        1.0, state.alpha, state.beta,
        state.p * params.b * scale, state.q * params.cbar * scale, state.r * params.b * scale,
        surfaces[0], surfaces[1], surfaces[2],
    ])


def moment_coefficients(state: AircraftState, surfaces, hidden, params: AircraftParams) -> np.ndarray:
    """True (C_l, C_m, C_n) including the hidden half elevator and flap channels

    :param surfaces: Visible deflections (delta_a, delta_e, delta_r)
    :param hidden: Hidden deflections (delta_h, delta_f)
    """
    aero = params.aero
    coefficients = aero.regression_matrix() @ regressors(state, surfaces, params)
    coefficients[0] += aero.Cl_df * hidden[1]
    coefficients[1] += aero.Cm_dh * hidden[0]
    return coefficients


def aero_moments(state: AircraftState, surfaces, hidden, params: AircraftParams) -> np.ndarray:
    """Dimensional aerodynamic moments (L, M, N) in N m"""
    return params.qbar(state.V) * params.S * params.lengths * moment_coefficients(state, surfaces, hidden, params)


def rate_derivative(omega, moments, params: AircraftParams) -> np.ndarray:
    """I^{-1} (M + M_delta) - I^{-1} (omega x I omega)"""
    omega = np.asarray(omega, dtype=float)
    inertia = params.inertia
    return np.linalg.solve(inertia, np.asarray(moments, dtype=float) - np.cross(omega, inertia @ omega))


def aircraft_deriv(state: AircraftState, moments, params: AircraftParams) -> AircraftState:
    """Simplified equations of motion

    Small aero angles, no side force, lift balancing gravity. V and gamma
    are constant.
    """
    check_envelope(state)
    g_over_V = params.g / state.V
    sin_phi, cos_phi, tan_phi = math.sin(state.phi), math.cos(state.phi), math.tan(state.phi)
    omega_dot = rate_derivative(state.omega, moments, params)
    return AircraftState(
        V=0.0,
        alpha=state.q - g_over_V * sin_phi * tan_phi,
        beta=-state.r + g_over_V * sin_phi,
        p=omega_dot[0],
        q=omega_dot[1],
        r=omega_dot[2],
        phi=state.p + math.tan(state.theta) * (state.q * sin_phi + state.r * cos_phi),
        theta=state.q * cos_phi - state.r * sin_phi,
        chi=g_over_V * tan_phi,
        gamma=0.0,
    )


@dataclass(frozen=True)
class ForceModel:
    """Lift, side force and drag of the full equations"""
    lift: float
    side: float
    drag: float

    @classmethod
    def evaluate(cls, state: AircraftState, params: AircraftParams) -> "ForceModel":
        aero = params.aero
        pressure = params.qbar(state.V) * params.S
        CL = aero.CL0 + aero.CL_alpha * state.alpha
        return cls(
            lift=pressure * CL,
            side=pressure * aero.CY_beta * state.beta,
            drag=pressure * (aero.CD0 + aero.CD_k * CL * CL),
        )


def full_deriv(state: AircraftState, moments, params: AircraftParams, thrust: float) -> AircraftState:
    """Full point mass and rigid body equations, the velocity bank angle taken as phi

    Thrust is axial and only enters the airspeed equation.
    """
    check_envelope(state)
    forces = ForceModel.evaluate(state, params)
    m, g, V = params.mass, params.g, state.V
    cos_beta, sin_beta = math.cos(state.beta), math.sin(state.beta)
    cos_gamma = math.cos(state.gamma)
    sin_mu, cos_mu = math.sin(state.phi), math.cos(state.phi)
    cos_alpha, sin_alpha = math.cos(state.alpha), math.sin(state.alpha)
    omega_dot = rate_derivative(state.omega, moments, params)
    return AircraftState(
        V=(thrust * cos_alpha * cos_beta - forces.drag) / m - g * math.sin(state.gamma),
        alpha=state.q - math.tan(state.beta) * (cos_alpha * state.p + sin_alpha * state.r)
        + (-forces.lift + m * g * cos_gamma * cos_mu) / (m * V * cos_beta),
        beta=-cos_alpha * state.r + sin_alpha * state.p
        + (forces.side * cos_beta + m * g * cos_gamma * sin_mu) / (m * V),
        p=omega_dot[0],
        q=omega_dot[1],
        r=omega_dot[2],
        phi=state.p + math.tan(state.theta) * (state.q * sin_mu + state.r * cos_mu),
        theta=state.q * cos_mu - state.r * sin_mu,
        chi=(forces.lift * sin_mu + forces.side * cos_mu * cos_beta) / (m * V * cos_gamma),
        gamma=(forces.lift * cos_mu - forces.side * sin_mu * cos_beta - m * g * cos_gamma) / (m * V),
    )


@dataclass
class ThrottleLoop:
    """Proportional integral airspeed hold, unknown to controller and learner"""
    V_ref: float
    trim_thrust: float
    kp: float = 2.0
    ki: float = 0.5

    @classmethod
    def trimmed(cls, params: AircraftParams, state: AircraftState, **gains) -> "ThrottleLoop":
        drag = ForceModel.evaluate(state, params).drag
        trim = (drag + params.mass * params.g * math.sin(state.gamma)) / (
            math.cos(state.alpha) * math.cos(state.beta))
        return cls(state.V, trim, **gains)

    def thrust(self, V: float, integral: float) -> float:
        return max(0.0, self.trim_thrust + self.kp * (self.V_ref - V) + self.ki * integral)

    def integral_rate(self, V: float) -> float:
        return self.V_ref - V


def saturate_surfaces(surfaces, limit: float = SURFACE_LIMIT) -> np.ndarray:
    return np.clip(np.asarray(surfaces, dtype=float), -limit, limit)
