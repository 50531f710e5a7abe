"""L1 adaptive controller

State predictor, piecewise constant adaptive law and the filtered control
law u(s) = -(D0(s)/s) mu(s), mu = u + eta1 - k r. The control law is
realized as continuous dynamics:

    x_f'   = A_f x_f + B_f mu
    u_int' = C_f x_f + D_f mu
    u      = -u_int
"""

from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import numpy as np
import scipy.linalg as sla

from .exceptions import DimensionError, RankError
from .linalg import (as_matrix, as_vector, controllable, observable,
                     sampled_predictor_factor)
from .logger import format_norm, logger
from .model import ModeDefinition

REINIT_MEASURED = "measured"
REINIT_NOISY = "measured_plus_noise"
REINIT_NONE = "none"
REINIT_POLICIES = (REINIT_MEASURED, REINIT_NOISY, REINIT_NONE)


@dataclass(frozen=True, eq=False)
class FilterRealization:
    """Minimal state space realization (A_f, B_f, C_f, D_f) of D0(s)

    ``n_f == 0`` stands for the constant filter D0(s) = D_f.
    """
    A_f: np.ndarray
    B_f: np.ndarray
    C_f: np.ndarray
    D_f: np.ndarray

    def __post_init__(self):
        D_f = as_matrix(self.D_f, "D_f")
        m = D_f.shape[0]
        if D_f.shape != (m, m):
            raise DimensionError("D_f must be square")
        A_f = np.zeros((0, 0)) if np.size(self.A_f) == 0 else as_matrix(self.A_f, "A_f")
        n_f = A_f.shape[0]
        if A_f.shape != (n_f, n_f):
            raise DimensionError("A_f must be square")
        try:
            B_f = np.array(self.B_f, dtype=float).reshape(n_f, m)
            C_f = np.array(self.C_f, dtype=float).reshape(m, n_f)
        except ValueError as exc:
            raise DimensionError("B_f or C_f does not fit A_f and D_f") from exc
        if n_f > 0 and not (controllable(A_f, B_f) and observable(A_f, C_f)):
            raise RankError("filter realization is not minimal")
        for name, value in (("A_f", A_f), ("B_f", B_f), ("C_f", C_f), ("D_f", D_f)):
            object.__setattr__(self, name, value)

    @classmethod
    def constant(cls, gain, m: int) -> "FilterRealization":
        """D0(s) = gain * I_m (or a full m x m gain matrix)"""
        gain = np.asarray(gain, dtype=float)
        D_f = gain * np.eye(m) if gain.ndim == 0 else gain
        return cls(np.zeros((0, 0)), np.zeros((0, m)), np.zeros((m, 0)), D_f)

    @property
    def n_f(self) -> int:
        return self.A_f.shape[0]

    @property
    def m(self) -> int:
        return self.D_f.shape[0]

    def d0(self, s: complex) -> np.ndarray:
        """Evaluate D0(s)"""
        if self.n_f == 0:
            return self.D_f.astype(complex)
        resolvent = np.linalg.solve(s * np.eye(self.n_f) - self.A_f, self.B_f)
        return self.C_f @ resolvent + self.D_f

    def low_pass(self, omega, s: complex) -> np.ndarray:
        """C(s) = omega (sI + D0(s) omega)^{-1} D0(s)"""
        omega = np.asarray(omega, dtype=float)
        d0 = self.d0(s)
        return omega @ np.linalg.solve(s * np.eye(self.m) + d0 @ omega, d0)


@dataclass(frozen=True)
class L1Config:
    """Controller settings

    :ivar Ts: Adaptation sampling time
    :ivar filter: Realization of D0(s)
    :ivar reinit_policy: One of ``measured``, ``measured_plus_noise``, ``none``
    :ivar noise_sigma: Standard deviation of the re-initialization noise
    :ivar zoh_control_rate: If set, the applied input is sampled at this rate (Hz) and held
    """
    Ts: float
    filter: FilterRealization
    reinit_policy: str = REINIT_MEASURED
    noise_sigma: float = 0.0
    zoh_control_rate: Optional[float] = None

    def __post_init__(self):
        if self.Ts <= 0:
            raise DimensionError("Ts must be positive")
        if self.reinit_policy not in REINIT_POLICIES:
            raise DimensionError("unknown reinit policy {!r}".format(self.reinit_policy))


@dataclass
class L1ControllerState:
    """Mutable controller state

    ``eta1``/``eta2`` only change at sample instants, ``u_int`` and ``x_f``
    evolve continuously and are never reset.
    """
    xhat: np.ndarray
    eta1: np.ndarray
    eta2: np.ndarray
    u_int: np.ndarray
    x_f: np.ndarray
    Ts: float
    last_sample_time: float = 0.0

    @classmethod
    def initial(cls, mode: ModeDefinition, filt: FilterRealization, x0, Ts: float) -> "L1ControllerState":
        return cls(
            xhat=as_vector(x0, mode.n, "x0").copy(),
            eta1=np.zeros(mode.m),
            eta2=np.zeros(mode.n - mode.m),
            u_int=np.zeros(mode.m),
            x_f=np.zeros(filt.n_f),
            Ts=Ts,
        )

    @property
    def u(self) -> np.ndarray:
        return -self.u_int


def predictor_deriv(mode: ModeDefinition, state: L1ControllerState, u) -> np.ndarray:
    """A xhat + B (u + eta1) + B_perp eta2"""
    u = np.asarray(u, dtype=float)
    if u.shape != (mode.m,) or state.xhat.shape != (mode.n,):
        raise DimensionError("predictor state or input has the wrong length")
    if state.eta2.shape != (mode.n - mode.m,):
        raise DimensionError("eta2 has the wrong length")
    derivative = mode.A @ state.xhat + mode.B @ (u + state.eta1)
    if state.eta2.size:
        derivative = derivative + mode.Bperp @ state.eta2
    return derivative


def _split(mode: ModeDefinition, eta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    return eta[:mode.m].copy(), eta[mode.m:].copy()


def adapt_update(mode: ModeDefinition, xtilde, Ts: float) -> Tuple[np.ndarray, np.ndarray]:
    """[eta1; eta2] = (B^v)^{-1} A (e^{-A Ts} - I)^{-1} xtilde

    Both inverses are linear solves.

    :raises DegenerateSamplingError: If (e^{-A Ts} - I) is singular
    """
    xtilde = as_vector(xtilde, mode.n, "xtilde")
    factor = sampled_predictor_factor(mode.A, Ts)
    eta = np.linalg.solve(mode.Bvee, mode.A @ sla.lu_solve(factor, xtilde))
    return _split(mode, eta)


class AdaptationLaw:
    """Adaptive law with the factorizations of the active mode cached

    Only one mode is held, a call with another mode replaces it.

    :ivar Ts: Sampling time
    """

    def __init__(self, Ts: float):
        self.Ts = Ts
        self._active: Optional[tuple] = None

    def _factor(self, mode: ModeDefinition):
        if self._active is None or self._active[0] is not mode:
            self._active = (
                mode,
                sampled_predictor_factor(mode.A, self.Ts),
                sla.lu_factor(mode.Bvee),
            )
        return self._active

    def __call__(self, mode: ModeDefinition, xtilde) -> Tuple[np.ndarray, np.ndarray]:
        _, sampled, bvee = self._factor(mode)
        eta = sla.lu_solve(bvee, mode.A @ sla.lu_solve(sampled, as_vector(xtilde, mode.n)))
        return _split(mode, eta)


def control_deriv(state: L1ControllerState, mode: ModeDefinition, r, filt: FilterRealization,
                  u_applied=None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Derivatives of the control law states

    :param state: Controller state
    :param mode: Active mode
    :param r: Reference input
    :param filt: Realization of D0(s)
    :param u_applied: Input actually applied (held value in zero order hold
        mode), defaults to -u_int
    :returns: (u_int_dot, x_f_dot, u)
    """
    u = state.u if u_applied is None else np.asarray(u_applied, dtype=float)
    mu = u + state.eta1 - mode.k @ as_vector(r, mode.m, "r")
    x_f_dot = filt.A_f @ state.x_f + filt.B_f @ mu
    u_int_dot = filt.C_f @ state.x_f + filt.D_f @ mu
    return u_int_dot, x_f_dot, u


def on_switch(state: L1ControllerState, new_mode: ModeDefinition, x_measured, policy: str,
              rng: Optional[np.random.Generator] = None, sigma: float = 0.0) -> L1ControllerState:
    """Re-initialize the predictor at a switch instant

    Filter and integrator states are kept, the estimates are kept until the
    next sample instant.
    """
    x_measured = as_vector(x_measured, new_mode.n, "x")
    if policy == REINIT_NONE:
        xhat = state.xhat.copy()
    elif policy == REINIT_MEASURED:
        xhat = x_measured.copy()
    elif policy == REINIT_NOISY:
        if rng is None:
            rng = np.random.default_rng()
        noise = sigma * rng.standard_normal(new_mode.n)
        logger.debug("Predictor re-initialized with noise of norm %s", format_norm(np.linalg.norm(noise)))
        xhat = x_measured + noise
    else:
        raise DimensionError("unknown reinit policy {!r}".format(policy))
    eta2 = state.eta2
    if eta2.shape != (new_mode.n - new_mode.m,):
        eta2 = np.zeros(new_mode.n - new_mode.m)
    return replace(state, xhat=xhat, eta2=eta2)


@dataclass
class L1Controller:
    """One controller instance for one simulation run

    :ivar config: Controller settings
    :ivar state: Current state
    :ivar law: Cached adaptive law
    """
    config: L1Config
    state: L1ControllerState
    law: AdaptationLaw = field(init=False)

    def __post_init__(self):
        self.law = AdaptationLaw(self.config.Ts)

    @classmethod
    def create(cls, config: L1Config, mode: ModeDefinition, x0) -> "L1Controller":
        return cls(config, L1ControllerState.initial(mode, config.filter, x0, config.Ts))

    def sample(self, t: float, mode: ModeDefinition, x_measured) -> None:
        """Recompute the estimates at a sample instant"""
        xtilde = self.state.xhat - as_vector(x_measured, mode.n)
        self.state.eta1, self.state.eta2 = self.law(mode, xtilde)
        self.state.last_sample_time = t

    def switch(self, mode: ModeDefinition, x_measured, rng=None) -> None:
        self.state = on_switch(
            self.state, mode, x_measured, self.config.reinit_policy,
            rng=rng, sigma=self.config.noise_sigma,
        )

    def derivatives(self, mode: ModeDefinition, xhat, u_int, x_f, r, u_applied=None):
        """Right hand side of (xhat, u_int, x_f) for a trial state

        Used inside integration stages, the estimates are taken from the
        held state.
        """
        trial = replace(self.state, xhat=xhat, u_int=u_int, x_f=x_f)
        u_int_dot, x_f_dot, u = control_deriv(trial, mode, r, self.config.filter, u_applied)
        return predictor_deriv(mode, trial, u), u_int_dot, x_f_dot
