"""Dense linear algebra primitives

Everything else in dwell goes through these helpers so the numerical
contracts (dimension checks, rank thresholds, definiteness checks) live in
one place.
"""

from typing import Optional

import numpy as np
import scipy.linalg as sla

from .exceptions import (DegenerateSamplingError, DimensionError,
                         NotHurwitzError, NotPositiveDefiniteError, RankError)
from .logger import format_norm, logger

CONDITION_WARNING = 1e8


def as_matrix(value, name="matrix") -> np.ndarray:
    """Return ``value`` as a finite 2d float array

    Scalars become 1x1, vectors become columns.
    """
    array = np.array(value, dtype=float)
    if array.ndim == 0:
        array = array.reshape(1, 1)
    elif array.ndim == 1:
        array = array.reshape(-1, 1)
    elif array.ndim != 2:
        raise DimensionError("{} must be two dimensional, got {}d".format(name, array.ndim))
    if not np.all(np.isfinite(array)):
        raise DimensionError("{} has non finite entries".format(name))
    return array


def as_vector(value, size: Optional[int] = None, name="vector") -> np.ndarray:
    """Return ``value`` as a flat float array, optionally checking its length"""
    array = np.array(value, dtype=float).reshape(-1)
    if size is not None and array.shape[0] != size:
        raise DimensionError("{} has length {}, expected {}".format(name, array.shape[0], size))
    return array


def _check_square(A, name="A"):
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError("{} must be square, got shape {}".format(name, A.shape))


def rank_tolerance(M: np.ndarray, singular_values: Optional[np.ndarray] = None) -> float:
    """Singular value threshold max(n, m) * eps * sigma_max"""
    if singular_values is None:
        singular_values = sla.svdvals(M)
    if singular_values.size == 0:
        return 0.0
    return max(M.shape) * np.finfo(float).eps * singular_values[0]


def matrix_rank(M: np.ndarray) -> int:
    """Numerical rank with :func:`rank_tolerance`"""
    singular_values = sla.svdvals(M)
    return int(np.sum(singular_values > rank_tolerance(M, singular_values)))


def norm2(M) -> float:
    """Induced 2-norm (largest singular value), Euclidean norm for vectors"""
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return 0.0
    if M.ndim < 2:
        return float(np.linalg.norm(M))
    return float(np.linalg.norm(M, 2))


def expm(A, t: float = 1.0) -> np.ndarray:
    """Matrix exponential e^{At}

    Scaling and squaring with Pade approximants.

    :param A: Square matrix
    :param t: Time in seconds
    :raises DimensionError: If A is not square
    """
    A = np.asarray(A, dtype=float)
    _check_square(A)
    if not np.isfinite(t):
        raise DimensionError("t must be finite")
    return sla.expm(A * t)


def pinv(B) -> np.ndarray:
    """Moore-Penrose pseudo inverse through the singular value decomposition"""
    B = np.asarray(B, dtype=float)
    if B.ndim != 2:
        raise DimensionError("B must be a matrix")
    if not np.any(B):
        raise RankError("pseudo inverse of a zero matrix requested")
    return sla.pinv(B, atol=0.0, rtol=max(B.shape) * np.finfo(float).eps)


def bperp(B) -> np.ndarray:
    """Orthonormal basis of the null space of B^T

    For square B the result has zero columns, so that [B, bperp(B)] == B.

    :raises RankError: If B does not have full column rank
    """
    B = np.asarray(B, dtype=float)
    if B.ndim != 2:
        raise DimensionError("B must be a matrix")
    n, m = B.shape
    if m > n:
        raise DimensionError("B has more columns than rows ({}x{})".format(n, m))
    if matrix_rank(B) < m:
        raise RankError("B is not full column rank")
    if m == n:
        return np.zeros((n, 0))
    return sla.null_space(B.T, rcond=max(B.shape) * np.finfo(float).eps)


def is_hurwitz(A, margin: float = 0.0) -> bool:
    """Check that every eigenvalue has real part below ``-margin``"""
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return True
    return bool(np.max(np.linalg.eigvals(A).real) < -margin)


def spectral_abscissa(A) -> float:
    """Largest real part of the eigenvalues of A"""
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return -np.inf
    return float(np.max(np.linalg.eigvals(A).real))


def symmetrize(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def check_spd(M, name="matrix") -> np.ndarray:
    """Return the lower Cholesky factor, raising if M is not SPD

    :raises NotPositiveDefiniteError: If M is not symmetric or not positive definite
    """
    M = np.asarray(M, dtype=float)
    _check_square(M, name)
    scale = max(1.0, np.max(np.abs(M)))
    if np.max(np.abs(M - M.T)) > 1e-9 * scale:
        raise NotPositiveDefiniteError("{} is not symmetric".format(name))
    try:
        return sla.cholesky(symmetrize(M), lower=True)
    except sla.LinAlgError as exc:
        raise NotPositiveDefiniteError("{} is not positive definite".format(name)) from exc


def lyap_solve(A, Q) -> np.ndarray:
    """Solve A^T P + P A = -Q for a Hurwitz A and SPD Q

    :raises NotHurwitzError: If A has eigenvalues in the closed right half plane
    """
    A = np.asarray(A, dtype=float)
    Q = np.asarray(Q, dtype=float)
    _check_square(A)
    if Q.shape != A.shape:
        raise DimensionError("Q has shape {}, expected {}".format(Q.shape, A.shape))
    check_spd(Q, "Q")
    if not is_hurwitz(A):
        raise NotHurwitzError()
    # scipy solves a X + X a^H = q
    P = sla.solve_continuous_lyapunov(A.T, -Q)
    return symmetrize(P)


def gev_max(P, Q) -> float:
    """Smallest mu with P <= mu Q

    This is the largest generalized eigenvalue of the pencil (P, Q).
    """
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if P.shape != Q.shape:
        raise DimensionError("P and Q differ in shape")
    check_spd(P, "P")
    check_spd(Q, "Q")
    return float(sla.eigh(symmetrize(P), symmetrize(Q), eigvals_only=True)[-1])


def gev_min(M, P) -> float:
    """Smallest generalized eigenvalue of a symmetric M against an SPD P

    The largest lambda with M >= lambda P.
    """
    M = np.asarray(M, dtype=float)
    check_spd(P, "P")
    return float(sla.eigh(symmetrize(M), symmetrize(P), eigvals_only=True)[0])


def decay_rate(A, P) -> float:
    """Largest lambda with A^T P + P A <= -lambda P"""
    A = np.asarray(A, dtype=float)
    return gev_min(-(A.T @ P + P @ A), P)


def sqrtm_spd(P) -> np.ndarray:
    """Symmetric square root of an SPD matrix"""
    values, vectors = sla.eigh(symmetrize(np.asarray(P, dtype=float)))
    if values[0] <= 0:
        raise NotPositiveDefiniteError("matrix is not positive definite")
    return (vectors * np.sqrt(values)) @ vectors.T


def sampled_predictor_factor(A, Ts: float):
    """LU factors of (e^{-A Ts} - I)

    :raises DegenerateSamplingError: If the matrix is singular
    """
    A = np.asarray(A, dtype=float)
    _check_square(A)
    if Ts <= 0:
        raise DegenerateSamplingError("Ts must be positive, got {}".format(Ts))
    M = expm(A, -Ts) - np.eye(A.shape[0])
    singular_values = sla.svdvals(M)
    if singular_values[-1] <= rank_tolerance(M, singular_values):
        raise DegenerateSamplingError("degenerate sampling: e^(-A Ts) - I is singular")
    condition = singular_values[0] / singular_values[-1]
    if condition > CONDITION_WARNING:
        logger.warning(
            "Sampled predictor map is badly conditioned (cond %s, Ts %s)",
            format_norm(condition), Ts,
        )
    return sla.lu_factor(M)


def solve_sampled(A, Ts: float, x) -> np.ndarray:
    """Return (e^{-A Ts} - I)^{-1} x by a linear solve"""
    return sla.lu_solve(sampled_predictor_factor(A, Ts), np.asarray(x, dtype=float))


def controllable(A, B) -> bool:
    """Rank test of the controllability matrix"""
    n = A.shape[0]
    if n == 0:
        return True
    blocks = [B]
    for _ in range(n - 1):
        blocks.append(A @ blocks[-1])
    return matrix_rank(np.hstack(blocks)) == n


def observable(A, C) -> bool:
    """Rank test of the observability matrix"""
    return controllable(A.T, C.T)
