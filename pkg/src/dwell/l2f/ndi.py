"""Three loop nonlinear dynamic inversion

Guidance to attitude, attitude to body rates, body rates to moments. The
inner loop inverts the rate dynamics with the learned moment estimate in
place of a measurement.
"""

import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from ..exceptions import DimensionError, EnvelopeViolation
from ..logger import logger
from .aircraft import AircraftParams, AircraftState

ROLL_LIMIT = math.radians(45.0)
DEFAULT_ZETA = 0.8
OMEGA_FLOOR = 0.5


@dataclass(frozen=True, eq=False)
class NdiGains:
    """Loop gains of the baseline controller

    :ivar K_chi: Ground track gain, 1/s
    :ivar K_phi: Bank angle gain, 1/s
    :ivar K_theta: Pitch angle gain, 1/s
    :ivar K_beta: Sideslip gain, 1/s
    :ivar K_omega: Diagonal rate gains (K_p, K_q, K_r), 1/s
    :ivar omega_n: Natural frequency per axis, rad/s
    :ivar zeta: Damping ratio
    :ivar flags: Axes whose frequency was floored
    """
    K_chi: float
    K_phi: float
    K_theta: float
    K_beta: float
    K_omega: np.ndarray
    omega_n: np.ndarray
    zeta: float = DEFAULT_ZETA
    flags: Tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        K_omega = np.array(self.K_omega, dtype=float)
        if K_omega.ndim == 1:
            K_omega = np.diag(K_omega)
        if K_omega.shape != (3, 3):
            raise DimensionError("K_omega must be 3x3")
        gains = (self.K_chi, self.K_phi, self.K_theta, self.K_beta) + tuple(np.diag(K_omega))
        if min(gains) <= 0:
            raise DimensionError("NDI gains must be positive")
        object.__setattr__(self, "K_omega", K_omega)
        object.__setattr__(self, "omega_n", np.array(self.omega_n, dtype=float))

    @classmethod
    def from_frequencies(cls, omega_n, zeta: float = DEFAULT_ZETA, K_chi: float = 0.5,
                         flags=()) -> "NdiGains":
        """Second order shaping per axis, K_rate = 2 zeta omega_n, K_angle = omega_n / (2 zeta)"""
        omega_n = np.asarray(omega_n, dtype=float)
        rate = 2.0 * zeta * omega_n
        angle = omega_n / (2.0 * zeta)
        return cls(K_chi, angle[0], angle[1], angle[2], np.diag(rate), omega_n, zeta, tuple(flags))

    def relative_change(self, other: "NdiGains") -> float:
        """Largest relative change of the rate gains"""
        old = np.diag(self.K_omega)
        new = np.diag(other.K_omega)
        return float(np.max(np.abs(new - old) / np.abs(old)))


def natural_frequencies(coefficients, qbar: float, params: AircraftParams) -> np.ndarray:
    """Desired frequencies from (C_l_delta_a, C_m_alpha, C_n_beta)

    Roll |qbar S b / (2 I_xx) C_l_da|, pitch |qbar S cbar / I_yy C_m_alpha|,
    yaw |qbar S b / I_zz C_n_beta|, each under a square root.
    """
    Cl_da, Cm_alpha, Cn_beta = coefficients
    inertia = params.inertia
    pressure = qbar * params.S
    return np.sqrt(np.abs([
        pressure * params.b / (2.0 * inertia[0, 0]) * Cl_da,
        pressure * params.cbar / inertia[1, 1] * Cm_alpha,
        pressure * params.b / inertia[2, 2] * Cn_beta,
    ]))


def gains_from_model(coefficients, qbar: float, params: AircraftParams, zeta: float = DEFAULT_ZETA,
                     omega_floor: float = OMEGA_FLOOR, K_chi: float = 0.5) -> NdiGains:
    """Gains for the current learned coefficients

    :param coefficients: Estimates of (C_l_delta_a, C_m_alpha, C_n_beta)
    :param omega_floor: Lower limit of the natural frequencies
    """
    if qbar <= 0:
        raise DimensionError("dynamic pressure must be positive")
    omega_n = natural_frequencies(coefficients, qbar, params)
    flags = []
    for axis, name in enumerate(("roll", "pitch", "yaw")):
        if omega_n[axis] < omega_floor:
            logger.warning("%s frequency %.3g below floor, using %.3g", name, omega_n[axis], omega_floor)
            flags.append(name)
            omega_n[axis] = omega_floor
    return NdiGains.from_frequencies(omega_n, zeta, K_chi, flags)


def pitch_for_path_angle(gamma_cmd: float, state: AircraftState) -> Tuple[float, bool]:
    """Solve sin(gamma) = a1 sin(theta) - a2 cos(theta) for theta nearest the current pitch

    a1 = cos(alpha) cos(beta), a2 = sin(phi) sin(beta) + cos(phi) sin(alpha) cos(beta).

    :returns: (theta_cmd, clamped)
    """
    a1 = math.cos(state.alpha) * math.cos(state.beta)
    a2 = math.sin(state.phi) * math.sin(state.beta) + math.cos(state.phi) * math.sin(state.alpha) * math.cos(state.beta)
    amplitude = math.hypot(a1, a2)
    offset = math.atan2(a2, a1)
    ratio = math.sin(gamma_cmd) / amplitude
    clamped = abs(ratio) > 1.0
    ratio = max(-1.0, min(1.0, ratio))
    first = offset + math.asin(ratio)
    second = offset + math.pi - math.asin(ratio)

    def distance(angle):
        return abs(math.remainder(angle - state.theta, 2.0 * math.pi))

    theta = first if distance(first) <= distance(second) else second
    return math.remainder(theta, 2.0 * math.pi), clamped


def ndi_outer(chi_cmd: float, gamma_cmd: float, state: AircraftState, K_chi: float,
              g: float = 9.81) -> Tuple[float, float, bool]:
    """Guidance loop

    :returns: (phi_cmd, theta_cmd, gamma clamped)
    """
    error = math.remainder(chi_cmd - state.chi, 2.0 * math.pi)
    phi_cmd = math.atan(state.V / g * K_chi * error)
    phi_cmd = max(-ROLL_LIMIT, min(ROLL_LIMIT, phi_cmd))
    theta_cmd, clamped = pitch_for_path_angle(gamma_cmd, state)
    return phi_cmd, theta_cmd, clamped


def ndi_middle(phi_cmd: float, theta_cmd: float, beta_cmd: float, state: AircraftState,
               gains: NdiGains, g: float = 9.81) -> np.ndarray:
    """Attitude loop, returns (p_cmd, q_cmd, r_cmd)

    :raises EnvelopeViolation: If cos(phi) is below 1e-3
    """
    cos_phi, sin_phi = math.cos(state.phi), math.sin(state.phi)
    if abs(cos_phi) < 1e-3:
        raise EnvelopeViolation("bank angle too close to 90 deg for the attitude loop")
    p_cmd = gains.K_phi * (phi_cmd - state.phi) - math.tan(state.theta) * (state.q * sin_phi + state.r * cos_phi)
    q_cmd = (gains.K_theta * (theta_cmd - state.theta) + state.r * sin_phi) / cos_phi
    r_cmd = -gains.K_beta * (beta_cmd - state.beta) - g / state.V * sin_phi
    return np.array([p_cmd, q_cmd, r_cmd])


def ndi_inner(omega_cmd, omega, M_hat, inertia, K_omega) -> np.ndarray:
    """M_delta = I K_omega (omega_cmd - omega) - (M_hat - omega x I omega)"""
    omega = np.asarray(omega, dtype=float)
    inertia = np.asarray(inertia, dtype=float)
    rate_error = np.asarray(omega_cmd, dtype=float) - omega
    return inertia @ (np.asarray(K_omega) @ rate_error) - (np.asarray(M_hat, dtype=float) - np.cross(omega, inertia @ omega))


def ndi_inner_augmented(u, omega, M_hat, inertia, K_omega) -> np.ndarray:
    """Inner loop with the desired rate dynamics omega' = -K_omega omega + u

    ``u = K_omega omega_cmd`` recovers :func:`ndi_inner`.
    """
    omega = np.asarray(omega, dtype=float)
    inertia = np.asarray(inertia, dtype=float)
    desired = np.asarray(u, dtype=float) - np.asarray(K_omega) @ omega
    return inertia @ desired - (np.asarray(M_hat, dtype=float) - np.cross(omega, inertia @ omega))


def allocate(M_delta, qbar: float, params: AircraftParams, control_derivatives) -> np.ndarray:
    """Visible surface deflections producing the moment command

    :param control_derivatives: 3x3 matrix d(C_l, C_m, C_n) / d(delta_a, delta_e, delta_r)
    """
    effectiveness = (qbar * params.S * params.lengths)[:, None] * np.asarray(control_derivatives, dtype=float)
    return np.linalg.solve(effectiveness, np.asarray(M_delta, dtype=float))
