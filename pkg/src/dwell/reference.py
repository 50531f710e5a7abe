"""Ideal and reference systems

The reference system is the closed loop that knows the uncertainty exactly
and cancels it within the filter bandwidth. Its states are
[x_ref; x_f; x_I] with u_ref = -x_I. The matrices are assembled from the loop

    x'   = A x + B (omega u + theta^T x + d)
    x_f' = A_f x_f + B_f mu
    x_I' = C_f x_f + D_f mu
    mu   = omega u + theta^T x + d - k r,  u = -x_I
"""

from dataclasses import dataclass

import numpy as np

from .controller import FilterRealization
from .linalg import as_vector
from .model import ModeDefinition


@dataclass(frozen=True, eq=False)
class ClosedLoopMatrices:
    """x_bar' = Abar x_bar + Bbar d + Ebar r, u_ref = Cbar x_bar"""
    Abar: np.ndarray
    Bbar: np.ndarray
    Ebar: np.ndarray
    Cbar: np.ndarray

    @property
    def size(self) -> int:
        return self.Abar.shape[0]


@dataclass
class IdealState:
    """x_id' = A x_id + B k r"""
    x_id: np.ndarray

    def outputs(self, mode: ModeDefinition, r):
        """Return (u_id, y_id)"""
        return mode.k @ np.asarray(r, dtype=float), mode.C @ self.x_id


@dataclass
class ReferenceState:
    """Stacked reference state [x_ref; x_f; x_I]"""
    xbar: np.ndarray
    n: int
    m: int

    @classmethod
    def initial(cls, x0, n_f: int, m: int) -> "ReferenceState":
        x0 = as_vector(x0)
        return cls(np.concatenate([x0, np.zeros(n_f + m)]), x0.shape[0], m)

    @property
    def x_ref(self) -> np.ndarray:
        return self.xbar[:self.n]

    @property
    def u_ref(self) -> np.ndarray:
        return -self.xbar[self.xbar.shape[0] - self.m:]


def build_closedloop_matrices(mode: ModeDefinition, theta, omega, filt: FilterRealization) -> ClosedLoopMatrices:
    """Assemble the reference closed loop for one (theta, omega) point

    Block rows (x, x_f, x_I):

        [A + B theta^T,   0,    -B omega  ]
        [B_f theta^T,     A_f,  -B_f omega]
        [D_f theta^T,     C_f,  -D_f omega]
    """
    theta = np.asarray(theta, dtype=float)
    omega = np.asarray(omega, dtype=float)
    A, B, k = mode.A, mode.B, mode.k
    n, m, n_f = mode.n, mode.m, filt.n_f
    A_f, B_f, C_f, D_f = filt.A_f, filt.B_f, filt.C_f, filt.D_f

    Abar = np.block([
        [A + B @ theta.T, np.zeros((n, n_f)), -B @ omega],
        [B_f @ theta.T, A_f, -B_f @ omega],
        [D_f @ theta.T, C_f, -D_f @ omega],
    ])
    Bbar = np.vstack([B, B_f, D_f])
    Ebar = np.vstack([np.zeros((n, m)), -B_f @ k, -D_f @ k])
    Cbar = np.hstack([np.zeros((m, n + n_f)), -np.eye(m)])
    return ClosedLoopMatrices(Abar, Bbar, Ebar, Cbar)


def reference_deriv(xbar, matrices: ClosedLoopMatrices, d, r) -> np.ndarray:
    """Abar x_bar + Bbar d + Ebar r"""
    return matrices.Abar @ np.asarray(xbar, dtype=float) + matrices.Bbar @ np.asarray(d, dtype=float) \
        + matrices.Ebar @ np.asarray(r, dtype=float)


def reference_output(xbar, matrices: ClosedLoopMatrices) -> np.ndarray:
    """u_ref = Cbar x_bar"""
    return matrices.Cbar @ np.asarray(xbar, dtype=float)


def ideal_deriv(x_id, mode: ModeDefinition, r) -> np.ndarray:
    """A x_id + B k r"""
    return mode.A @ np.asarray(x_id, dtype=float) + mode.B @ (mode.k @ np.asarray(r, dtype=float))


# pylint: disable=too-many-arguments
def loop_deriv(x, x_f, x_i, mode: ModeDefinition, theta, omega, d, r, filt: FilterRealization):
    """Reference loop evaluated directly in feedback form

    Returns the derivatives of (x, x_f, x_I). Same dynamics as
    :func:`reference_deriv` on the stacked state.
    """
    theta = np.asarray(theta, dtype=float)
    omega = np.asarray(omega, dtype=float)
    u = -np.asarray(x_i, dtype=float)
    eta = omega @ u + theta.T @ x + np.asarray(d, dtype=float)
    mu = eta - mode.k @ np.asarray(r, dtype=float)
    return (
        mode.A @ x + mode.B @ eta,
        filt.A_f @ x_f + filt.B_f @ mu,
        filt.C_f @ x_f + filt.D_f @ mu,
    )


def reference_transfer(matrices: ClosedLoopMatrices, n: int, s: complex) -> np.ndarray:
    """Transfer from r to x_ref at the complex frequency s"""
    size = matrices.size
    response = np.linalg.solve(s * np.eye(size) - matrices.Abar, matrices.Ebar)
    return response[:n]


def ideal_filtered_transfer(mode: ModeDefinition, filt: FilterRealization, omega, s: complex) -> np.ndarray:
    """(sI - A)^{-1} B C(s) k, the ideal response seen through the low pass filter"""
    resolvent = np.linalg.solve(s * np.eye(mode.n) - mode.A, mode.B)
    return resolvent @ filt.low_pass(omega, s) @ mode.k


def dc_gain(filt: FilterRealization, omega) -> np.ndarray:
    """C(0), the identity for any admissible omega"""
    return np.real(filt.low_pass(omega, 0.0))
