"""Real time aerodynamic model learning

Exponentially weighted recursive least squares, one regression per moment
axis over the regressors [1, alpha, beta, p, q, r, delta_a, delta_e, delta_r].
The covariance is propagated in Joseph form so it stays symmetric positive
definite.
"""

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ..exceptions import DimensionError
from ..logger import logger
from .aircraft import AircraftParams, AircraftState, regressors

N_REGRESSORS = 9
AXES = ("roll", "pitch", "yaw")
DEFAULT_P0 = 1e6

# (axis, regressor) of the coefficients the gains are computed from
CL_DA = (0, 6)
CM_ALPHA = (1, 1)
CN_BETA = (2, 2)


@dataclass(frozen=True, eq=False)
class LearnedModel:
    """Current estimate of the aerodynamic moment model

    :ivar coefficients: 3 x 9 weights, rows (C_l, C_m, C_n)
    :ivar covariance: 3 x 9 x 9, one covariance per axis
    :ivar forgetting: Forgetting factor in (0, 1]
    :ivar last_publish: Time of the last publish, None before the first one
    :ivar samples: Number of accepted samples
    """
    coefficients: np.ndarray
    covariance: np.ndarray
    forgetting: float = 1.0
    last_publish: Optional[float] = None
    samples: int = 0

    def __post_init__(self):
        coefficients = np.array(self.coefficients, dtype=float)
        covariance = np.array(self.covariance, dtype=float)
        if coefficients.shape != (3, N_REGRESSORS) or covariance.shape != (3, N_REGRESSORS, N_REGRESSORS):
            raise DimensionError("learned model needs 3x9 coefficients and 3x9x9 covariance")
        if not 0 < self.forgetting <= 1:
            raise DimensionError("forgetting factor must lie in (0, 1]")
        object.__setattr__(self, "coefficients", coefficients)
        object.__setattr__(self, "covariance", covariance)

    @classmethod
    def empty(cls, p0: float = DEFAULT_P0, forgetting: float = 1.0) -> "LearnedModel":
        return cls.with_prior(np.zeros((3, N_REGRESSORS)), p0, forgetting)

    @classmethod
    def with_prior(cls, coefficients, p0: float = DEFAULT_P0, forgetting: float = 1.0) -> "LearnedModel":
        covariance = np.repeat(p0 * np.eye(N_REGRESSORS)[None], 3, axis=0)
        return cls(coefficients, covariance, forgetting)

    @classmethod
    def from_truth(cls, params: AircraftParams, p0: float = DEFAULT_P0, forgetting: float = 1.0) -> "LearnedModel":
        """Model equal to the bare airframe, hidden channels excluded"""
        return cls.with_prior(params.aero.regression_matrix(), p0, forgetting)

    def coefficient(self, index) -> float:
        return float(self.coefficients[index])

    @property
    def gain_coefficients(self) -> np.ndarray:
        """(C_l_delta_a, C_m_alpha, C_n_beta)"""
        return np.array([self.coefficient(CL_DA), self.coefficient(CM_ALPHA), self.coefficient(CN_BETA)])

    @property
    def gain_variances(self) -> np.ndarray:
        return np.array([self.covariance[axis, index, index] for axis, index in (CL_DA, CM_ALPHA, CN_BETA)])

    @property
    def control_derivatives(self) -> np.ndarray:
        return self.coefficients[:, 6:9]

    def trusted(self, threshold: float) -> bool:
        return bool(np.all(self.gain_variances < threshold))

    def predict(self, phi) -> np.ndarray:
        return self.coefficients @ np.asarray(phi, dtype=float)

    def moment_estimate(self, state: AircraftState, params: AircraftParams) -> np.ndarray:
        """M_hat, the modeled moment without the control surface terms"""
        phi = regressors(state, np.zeros(3), params)
        return params.qbar(state.V) * params.S * params.lengths * self.predict(phi)


def rls_update(model: LearnedModel, phi, observed: float, axis: int) -> LearnedModel:
    """One recursive least squares step on a single axis

    K = P phi / (lambda + phi^T P phi),
    P+ = ((I - K phi^T) P (I - K phi^T)^T + lambda K K^T) / lambda.
    Non finite samples are skipped.
    """
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (N_REGRESSORS,):
        raise DimensionError("expected {} regressors".format(N_REGRESSORS))
    if not (np.all(np.isfinite(phi)) and np.isfinite(observed)):
        logger.warning("Non finite learner sample on the %s axis skipped", AXES[axis])
        return model
    forgetting = model.forgetting
    P = model.covariance[axis]
    weight = P @ phi
    gain = weight / (forgetting + phi @ weight)
    innovation = observed - model.coefficients[axis] @ phi
    projector = np.eye(N_REGRESSORS) - np.outer(gain, phi)
    P_next = (projector @ P @ projector.T + forgetting * np.outer(gain, gain)) / forgetting
    coefficients = model.coefficients.copy()
    covariance = model.covariance.copy()
    coefficients[axis] = coefficients[axis] + gain * innovation
    covariance[axis] = 0.5 * (P_next + P_next.T)
    return replace(model, coefficients=coefficients, covariance=covariance, samples=model.samples + 1)


def rls_update_all(model: LearnedModel, phi, observed) -> LearnedModel:
    """Update all three axes with the same regressor vector"""
    for axis in range(3):
        model = rls_update(model, phi, float(observed[axis]), axis)
    return model


def batch_least_squares(Phi, y, p0: float = DEFAULT_P0, prior=None) -> np.ndarray:
    """Regularized batch solution (Phi^T Phi + I / p0)^{-1} (Phi^T y + prior / p0)

    Equals the recursive estimate without forgetting started from ``prior``
    with covariance p0 I.
    """
    Phi = np.asarray(Phi, dtype=float)
    y = np.asarray(y, dtype=float)
    prior = np.zeros(Phi.shape[1]) if prior is None else np.asarray(prior, dtype=float)
    normal = Phi.T @ Phi + np.eye(Phi.shape[1]) / p0
    return np.linalg.solve(normal, Phi.T @ y + prior / p0)


def observed_coefficients(state: AircraftState, omega_dot, params: AircraftParams) -> np.ndarray:
    """Non-dimensional total moment (I omega' + omega x I omega) / (qbar S l)"""
    omega = state.omega
    inertia = params.inertia
    moments = inertia @ np.asarray(omega_dot, dtype=float) + np.cross(omega, inertia @ omega)
    return moments / (params.qbar(state.V) * params.S * params.lengths)
