"""Stability and performance certificates

Lyapunov conditions for the modes and for the reference closed loop, the
dwell time, the sampling-time condition and the transient bounds
delta0/delta1/delta2 together with every auxiliary constant they need.

Nothing here uses a semidefinite solver: candidate Lyapunov matrices are
seeded from Lyapunov equations and the decay and growth rates are measured
by generalized eigenvalue problems at the polytope vertices.
"""

import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as sla
from scipy.integrate import cumulative_trapezoid

from .controller import FilterRealization
from .exceptions import CertificateInfeasible, DimensionError, NotHurwitzError
from .linalg import (decay_rate, expm, gev_max, is_hurwitz, lyap_solve, norm2,
                     sampled_predictor_factor, spectral_abscissa, sqrtm_spd,
                     symmetrize)
from .logger import logger
from .model import (ModeDefinition, ModeSet, SwitchingSignal, UncertaintyBounds,
                    UncertaintySets, uncertainty_bounds)
from .reference import build_closedloop_matrices

QUADRATURE_STEPS = 200
RICHARDSON_TOLERANCE = 1e-3
NU_MARGIN = 1.05
MU_LIMIT_OFFSET = 1e-6
DELTA0_MARGIN = 1.05
DELTA0_FLOOR = 1e-6
TS_SEARCH_CAP = 1.0

CONDITION_MODE = "mode Lyapunov"
CONDITION_REFERENCE = "reference Lyapunov"
CONDITION_DWELL = "dwell time"
CONDITION_SAMPLING = "sampling time"
CONDITION_G = "g block"


@dataclass
class ModeLyapunov:
    """Result of the mode Lyapunov search

    :ivar P_list: Per mode P_i >= I
    :ivar lam: Common decay rate
    :ivar mu: Growth factor between modes
    :ivar feasible: Whether every mode admits a certificate
    :ivar violation: Reason when infeasible
    """
    P_list: List[np.ndarray]
    lam: float
    mu: float
    feasible: bool = True
    violation: Optional[str] = None
    index: Optional[int] = None


def normalize_spd(P: np.ndarray) -> np.ndarray:
    """Scale P so that its smallest eigenvalue is one"""
    P = symmetrize(P)
    return P / np.linalg.eigvalsh(P)[0]


def max_pair_growth(P_list: Sequence[np.ndarray]) -> float:
    """max_{i,j} of the smallest mu with P_i <= mu P_j"""
    return max(gev_max(P_i, P_j) for P_i in P_list for P_j in P_list)


def find_mode_lyapunov(modes: ModeSet, lambda_target: Optional[float] = None) -> ModeLyapunov:
    """Mode Lyapunov functions with A_i^T P_i + P_i A_i <= -lambda P_i

    :param modes: The plant modes, all Hurwitz
    :param lambda_target: Required decay rate, infeasible if not reached
    """
    P_list = []
    for index, mode in enumerate(modes):
        try:
            P_list.append(normalize_spd(lyap_solve(mode.A, np.eye(mode.n))))
        except NotHurwitzError:
            return ModeLyapunov([], 0.0, math.inf, False, "mode {} is not Hurwitz".format(index), index)

    rates = [decay_rate(mode.A, P) for mode, P in zip(modes, P_list)]
    lam = min(rates)
    mu = max(1.0, max_pair_growth(P_list))

    for index, (mode, P) in enumerate(zip(modes, P_list)):
        residual = mode.A.T @ P + P @ mode.A + lam * P
        if np.max(np.linalg.eigvalsh(symmetrize(residual))) > 1e-8 * max(1.0, np.max(np.abs(P))):
            return ModeLyapunov(P_list, lam, mu, False, "re-substitution failed for mode {}".format(index), index)
    if lambda_target is not None and lam < lambda_target:
        index = int(np.argmin(rates))
        return ModeLyapunov(P_list, lam, mu, False,
                            "decay rate {:.4g} below target {:.4g}".format(lam, lambda_target), index)
    return ModeLyapunov(P_list, lam, mu)


@dataclass
class ReferenceLyapunov:
    """Result of the reference closed loop verification

    :ivar Pbar_list: Per mode Pbar_i >= I, common over the Theta x Omega vertices
    :ivar lam: Decay rate measured at the vertices
    :ivar mu: Growth factor between modes
    :ivar vertex: (mode, theta index, omega index) of the worst vertex
    """
    Pbar_list: List[np.ndarray]
    lam: float
    mu: float
    feasible: bool
    violation: Optional[str] = None
    vertex: Optional[Tuple[int, int, int]] = None


def _vertex_rates(mode, sets, filt, Pbar):
    rates = []
    for t_index, theta in enumerate(sets.theta_vertices):
        for o_index, omega in enumerate(sets.omega_vertices):
            Abar = build_closedloop_matrices(mode, theta, omega, filt).Abar
            rates.append((decay_rate(Abar, Pbar), t_index, o_index))
    return rates


def _candidates(mode, sets, filt):
    """Lyapunov candidates: centroid first, then each vertex and their average"""
    centroid = build_closedloop_matrices(mode, sets.theta_centroid, sets.omega_centroid, filt).Abar
    size = centroid.shape[0]
    if not is_hurwitz(centroid):
        return []
    candidates = [normalize_spd(lyap_solve(centroid, np.eye(size)))]
    vertex_solutions = []
    for theta, omega in sets.parameter_vertices():
        Abar = build_closedloop_matrices(mode, theta, omega, filt).Abar
        if is_hurwitz(Abar):
            vertex_solutions.append(normalize_spd(lyap_solve(Abar, np.eye(size))))
    if len(vertex_solutions) > 1:
        candidates.extend(vertex_solutions)
        candidates.append(normalize_spd(np.mean(vertex_solutions, axis=0)))
    return candidates


# pylint: disable=too-many-locals
def verify_reference_lyapunov(
        modes: ModeSet,
        sets: UncertaintySets,
        filt: FilterRealization,
        Pbar_list: Optional[Sequence[np.ndarray]] = None,
) -> ReferenceLyapunov:
    """Verify the reference Lyapunov condition at every vertex of Theta x Omega

    The closed loop matrix is affine in (theta, omega), so the condition at
    the vertices implies it on the whole polytope.

    :param Pbar_list: Candidates, seeded automatically when omitted
    """
    chosen = []
    worst = (math.inf, None)
    for index, mode in enumerate(modes):
        if Pbar_list is not None:
            candidates = [symmetrize(np.asarray(Pbar_list[index], dtype=float))]
            if np.linalg.eigvalsh(candidates[0])[0] < 1.0 - 1e-9:
                return ReferenceLyapunov(list(Pbar_list), 0.0, math.inf, False,
                                         "Pbar of mode {} is not >= I".format(index))
        else:
            candidates = _candidates(mode, sets, filt)
            if not candidates:
                return ReferenceLyapunov([], 0.0, math.inf, False,
                                         "{}: closed loop of mode {} is not Hurwitz".format(
                                             CONDITION_REFERENCE, index))
        best = None
        for candidate in candidates:
            rate, t_index, o_index = min(_vertex_rates(mode, sets, filt, candidate), key=lambda item: item[0])
            if best is None or rate > best[0]:
                best = (rate, candidate, t_index, o_index)
        chosen.append(best[1])
        if best[0] < worst[0]:
            worst = (best[0], (index, best[2], best[3]))

    lam, vertex = worst
    mu = max(1.0, max_pair_growth(chosen))
    if lam <= 0:
        return ReferenceLyapunov(chosen, lam, mu, False,
                                 "{}: decay rate {:.4g} at mode {} theta vertex {} omega vertex {}".format(
                                     CONDITION_REFERENCE, lam, *vertex), vertex)
    return ReferenceLyapunov(chosen, lam, mu, True, None, vertex)


def dwell_time(lam: float, mu: float, a_star: float) -> float:
    """tau_d = ln(mu) / ((1 - a*) lambda)"""
    if lam <= 0:
        raise DimensionError("lambda must be positive")
    if mu < 1:
        raise DimensionError("mu must be at least one")
    if not 0 < a_star < 1:
        raise DimensionError("a* must lie in (0, 1)")
    return math.log(mu) / ((1.0 - a_star) * lam)


@dataclass(frozen=True)
class AlphaBars:
    alpha1: float
    alpha2: float
    alpha3: float

    def as_tuple(self):
        return (self.alpha1, self.alpha2, self.alpha3)


def _alpha_mode(mode: ModeDefinition, Ts: float, steps: int):
    h = Ts / steps
    step = expm(mode.A, h)
    gain = mode.A @ sla.lu_solve(sampled_predictor_factor(mode.A, Ts), np.eye(mode.n))
    phi = np.eye(mode.n)
    f1 = np.empty(steps + 1)
    f2 = np.empty(steps + 1)
    f3 = np.empty(steps + 1)
    for index in range(steps + 1):
        f1[index] = norm2(phi)
        f2[index] = norm2(phi @ gain)
        f3[index] = norm2(phi @ mode.B)
        phi = phi @ step
    # integrands are nonnegative so the running integrals peak at Ts
    alpha2 = cumulative_trapezoid(f2, dx=h, initial=0.0)
    alpha3 = cumulative_trapezoid(f3, dx=h, initial=0.0)
    return float(np.max(f1)), float(np.max(alpha2)), float(np.max(alpha3))


def alpha_bars(modes: ModeSet, Ts: float, steps: int = QUADRATURE_STEPS, check: bool = True) -> AlphaBars:
    """Maxima of the bounding functions over [0, Ts] and over the modes

    :param modes: The plant modes
    :param Ts: Sampling time
    :param steps: Quadrature steps per Ts
    :param check: Compare with twice the resolution and warn on a change above 0.1%
    """
    if Ts <= 0:
        raise DimensionError("Ts must be positive")
    values = np.max([_alpha_mode(mode, Ts, steps) for mode in modes], axis=0)
    result = AlphaBars(*(float(v) for v in values))
    if check:
        finer = alpha_bars(modes, Ts, 2 * steps, check=False)
        for coarse, fine in zip(result.as_tuple(), finer.as_tuple()):
            if fine > 0 and abs(coarse - fine) / fine > RICHARDSON_TOLERANCE:
                logger.warning("alpha quadrature not converged at Ts=%s (%s vs %s)", Ts, coarse, fine)
    return result


# pylint: disable=too-many-arguments
def ts_lhs(alpha: AlphaBars, D_omega: float, D_theta: float, D_d: float, rho: float, rho_u: float) -> float:
    """(a1 + a2 + 1) a3 (D_omega rho_u + D_theta rho + D_d)"""
    return (alpha.alpha1 + alpha.alpha2 + 1.0) * alpha.alpha3 * (D_omega * rho_u + D_theta * rho + D_d)


@dataclass(frozen=True)
class TsCondition:
    satisfied: bool
    lhs: float
    max_Ts: float


def ts_condition(alpha: AlphaBars, D_omega: float, D_theta: float, D_d: float, rho: float,
                 rho_u: float, delta0: float, modes: Optional[ModeSet] = None,
                 upper: float = TS_SEARCH_CAP, iterations: int = 40) -> TsCondition:
    """Evaluate the sampling-time condition and bisect for the largest Ts

    :param alpha: alpha bars at the configured Ts
    :param modes: Needed for the bisection, max_Ts is nan without them
    :param upper: Upper end of the Ts search
    """
    lhs = ts_lhs(alpha, D_omega, D_theta, D_d, rho, rho_u)
    satisfied = lhs < delta0
    if D_omega * rho_u + D_theta * rho + D_d == 0:
        return TsCondition(satisfied, lhs, math.inf)
    if modes is None:
        return TsCondition(satisfied, lhs, math.nan)

    def evaluate(Ts):
        return ts_lhs(alpha_bars(modes, Ts, check=False), D_omega, D_theta, D_d, rho, rho_u)

    if evaluate(upper) < delta0:
        return TsCondition(satisfied, lhs, upper)
    low, high = 0.0, upper
    for _ in range(iterations):
        middle = 0.5 * (low + high)
        if evaluate(middle) < delta0:
            low = middle
        else:
            high = middle
    return TsCondition(satisfied, lhs, low)


def extract_Q(Pbar, n: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Split Pbar = [[P, R], [R^T, S]] and return (Q, R, S), Q = S - R^T P^{-1} R"""
    Pbar = symmetrize(np.asarray(Pbar, dtype=float))
    P = Pbar[:n, :n]
    R = Pbar[:n, n:]
    S = Pbar[n:, n:]
    Q = symmetrize(S - R.T @ np.linalg.solve(P, R))
    return Q, R, S


@dataclass(frozen=True, eq=False)
class AnalysisMatrices:
    """Filter loop and error dynamics blocks for one mode and one omega"""
    Fbar: np.ndarray
    Bbar_f: np.ndarray
    Lbar: np.ndarray
    Cbar_f: np.ndarray
    Hbar: np.ndarray
    Jbar: np.ndarray
    Bbarbar: np.ndarray
    Gbar: np.ndarray


def build_analysis_matrices(mode: ModeDefinition, omega, filt: FilterRealization) -> AnalysisMatrices:
    """Assemble the analysis blocks with the closed loop sign convention

    The omega column carries the same sign as in the reference closed loop.
    """
    omega = np.asarray(omega, dtype=float)
    n, m, n_f = mode.n, mode.m, filt.n_f
    A, B, Bpinv = mode.A, mode.B, mode.Bpinv
    A_f, B_f, C_f, D_f = filt.A_f, filt.B_f, filt.C_f, filt.D_f
    Fbar = np.block([[A_f, -B_f @ omega], [C_f, -D_f @ omega]])
    Bbar_f = np.vstack([B_f, D_f])
    Lbar = np.hstack([C_f, -D_f @ omega])
    Cbar_f = np.hstack([np.zeros((m, n_f)), np.eye(m)])
    Hbar = np.vstack([-B @ Lbar, np.zeros((n_f + m, n_f + m))])
    Jbar = np.vstack([-B @ D_f @ Bpinv, -B_f @ Bpinv @ A, -D_f @ Bpinv @ A])
    Bbarbar = np.vstack([B @ omega, np.zeros((n_f + m, m))])
    Gbar = -Bbar_f @ Bpinv @ A
    return AnalysisMatrices(Fbar, Bbar_f, Lbar, Cbar_f, Hbar, Jbar, Bbarbar, Gbar)


def compute_nu(Pbar_list, Q_list, H_list, lam: float, a: float, floor: float = 1e-6) -> float:
    """Smallest feasible nu with a 5% margin

    :param H_list: Per mode a list of Hbar matrices (one per omega vertex)
    """
    values = []
    for Pbar, Q, H_mode in zip(Pbar_list, Q_list, H_list):
        root = sqrtm_spd(Pbar)
        for Hbar in H_mode:
            Hbar = np.atleast_2d(Hbar)
            inner = root @ Hbar @ np.linalg.solve(Q, Hbar.T) @ root
            values.append(float(np.max(np.linalg.eigvalsh(symmetrize(inner)))))
    peak = max(values, default=0.0)
    if peak <= 1e-14:
        return floor
    return max(floor, NU_MARGIN * peak / (lam * a) ** 2)


def compute_g(Pbar, Q, analysis: AnalysisMatrices, lam: float, a: float, nu: float) -> float:
    """Block norm constant of the error bound

    :raises CertificateInfeasible: If the inverted block is not negative definite
    """
    Pbar = np.asarray(Pbar, dtype=float)
    H, J, Bb, G = analysis.Hbar, analysis.Jbar, analysis.Bbarbar, analysis.Gbar
    size_e, size_f = Pbar.shape[0], Q.shape[0]
    n, m = J.shape[1], Bb.shape[1]
    middle = np.block([
        [-lam * a * Pbar, Pbar @ H],
        [H.T @ Pbar, -nu * lam * a * Q],
    ])
    if np.max(np.linalg.eigvalsh(symmetrize(middle))) >= 0:
        raise CertificateInfeasible(CONDITION_G, "g block is not negative definite")
    left = np.block([
        [J.T @ Pbar, nu * G.T @ Q],
        [Bb.T @ Pbar, np.zeros((m, size_f))],
    ])
    right = np.block([
        [Pbar @ J, Pbar @ Bb],
        [nu * Q @ G, np.zeros((size_f, m))],
    ])
    assert left.shape == (n + m, size_e + size_f)
    return norm2(left @ np.linalg.solve(middle, right))


def kappa_constants(modes: ModeSet, sets: UncertaintySets, filt: FilterRealization,
                    grid_points: int = 400) -> Tuple[float, float, float]:
    """Return (kappa_gamma, validated kappa, Lambda_Fbar)

    The validated value is the largest ||Cbar_f e^{Fbar t} Bbar_f B^+|| e^{-Lambda t}
    on a time grid, which covers non normal Fbar.
    """
    kappa = 0.0
    Lambda = -math.inf
    analyses = []
    for mode in modes:
        for omega in sets.omega_vertices:
            analysis = build_analysis_matrices(mode, omega, filt)
            analyses.append((mode, analysis))
            kappa = max(kappa, norm2(analysis.Cbar_f @ analysis.Bbar_f @ mode.Bpinv))
            Lambda = max(Lambda, spectral_abscissa(analysis.Fbar))
    horizon = min(20.0, 10.0 / max(abs(Lambda), 0.1))
    times = np.linspace(0.0, horizon, grid_points)
    validated = 0.0
    for mode, analysis in analyses:
        step = expm(analysis.Fbar, times[1] - times[0])
        phi = np.eye(analysis.Fbar.shape[0])
        target = analysis.Bbar_f @ mode.Bpinv
        for t in times:
            validated = max(validated, norm2(analysis.Cbar_f @ phi @ target) * math.exp(-Lambda * t))
            phi = phi @ step
    return kappa, validated, Lambda


def switching_factor(mu: float, a: float, a_star: float, n_switches: Optional[int] = None) -> Tuple[float, bool]:
    """mu (1 - mu^{(a - a*)/(1 - a*)})^{-1} + 1

    At mu = 1 the expression is singular, it is evaluated at 1 + 1e-6 and
    capped by n_switches + 1 when the switch count is known.

    :returns: (factor, limit used)
    """
    exponent = (a - a_star) / (1.0 - a_star)
    limit = mu <= 1.0 + 1e-9
    value = 1.0 + MU_LIMIT_OFFSET if limit else mu
    factor = value / (1.0 - value ** exponent) + 1.0
    if limit and n_switches is not None:
        factor = min(factor, n_switches + 1.0)
    return factor, limit


@dataclass
class Deltas:
    delta0: float
    delta1: float
    delta2: float
    g: float
    kappa_gamma: float
    kappa_validated: float
    Lambda_Fbar: float
    nu: float
    switch_factor: float
    mu_limit: bool
    delta1_gain: float
    delta2_gain: float


# pylint: disable=too-many-arguments, too-many-locals
def compute_deltas(modes: ModeSet, sets: UncertaintySets, filt: FilterRealization,
                   reference: ReferenceLyapunov, a: float, a_star: float, delta0: float,
                   n_switches: Optional[int] = None, nu_floor: float = 1e-6) -> Deltas:
    """delta1 and delta2 for a given delta0 together with g, nu and the kappa constants

    Both bounds are linear in delta0.
    """
    if not 0 < a < a_star < 1:
        raise DimensionError("need 0 < a < a* < 1")
    lam, mu = reference.lam, reference.mu
    n = modes.n
    Q_list = [extract_Q(Pbar, n)[0] for Pbar in reference.Pbar_list]
    analyses = [[build_analysis_matrices(mode, omega, filt) for omega in sets.omega_vertices] for mode in modes]
    nu = compute_nu(reference.Pbar_list, Q_list, [[x.Hbar for x in per_mode] for per_mode in analyses],
                    lam, a, nu_floor)
    g = max(
        compute_g(Pbar, Q, analysis, lam, a, nu)
        for Pbar, Q, per_mode in zip(reference.Pbar_list, Q_list, analyses)
        for analysis in per_mode
    )
    kappa, validated, Lambda = kappa_constants(modes, sets, filt)
    kappa_used = kappa
    if validated > kappa:
        logger.warning("validated kappa %.4g exceeds kappa_gamma %.4g, using the validated value", validated, kappa)
        kappa_used = validated
    factor, limit = switching_factor(mu, a, a_star, n_switches)
    if limit:
        logger.warning("mu = 1, switching factor evaluated in the limit (%.4g)", factor)

    delta1_gain = math.sqrt(factor * g / ((1.0 - a) * lam) * (1.0 + kappa_used ** 2))
    output_gain = max(
        norm2(np.hstack([np.hstack([np.zeros((modes.m, n + filt.n_f)), -np.eye(modes.m)]),
                         analysis.Lbar / math.sqrt(nu)]))
        for per_mode in analyses for analysis in per_mode
    )
    feedthrough = max(norm2(filt.D_f @ mode.Bpinv) for mode in modes)
    delta2_gain = output_gain * delta1_gain + feedthrough
    return Deltas(
        delta0=delta0,
        delta1=delta1_gain * delta0,
        delta2=delta2_gain * delta0,
        g=g,
        kappa_gamma=kappa,
        kappa_validated=validated,
        Lambda_Fbar=Lambda,
        nu=nu,
        switch_factor=factor,
        mu_limit=limit,
        delta1_gain=delta1_gain,
        delta2_gain=delta2_gain,
    )


def achievable_delta0(alpha: AlphaBars, D_omega: float, D_theta: float, D_d: float,
                      rho_r: float, rho_ur: float, delta1_gain: float, delta2_gain: float) -> float:
    """Smallest delta0 meeting the sampling-time condition with rho = rho_r + delta1

    Returns inf when no delta0 works at this Ts.
    """
    scale = (alpha.alpha1 + alpha.alpha2 + 1.0) * alpha.alpha3
    offset = scale * (D_omega * rho_ur + D_theta * rho_r + D_d)
    slope = scale * (D_omega * delta2_gain + D_theta * delta1_gain)
    if slope >= 1.0:
        return math.inf
    return offset / (1.0 - slope)


def analytic_reference_bounds(reference: ReferenceLyapunov, modes: ModeSet, filt: FilterRealization,
                              sets: UncertaintySets, x0, r_sup: float, tau_d: float) -> float:
    """Invariant level of sqrt(x_bar^T Pbar x_bar), a bound on ||x_ref|| and ||u_ref||

    Within a mode W = sqrt(V) obeys W' <= -lambda W / 2 + ||Pbar^(1/2)|| w, at a
    switch W grows at most by sqrt(mu) and the dwell time contracts the excess.
    """
    lam, mu = reference.lam, reference.mu
    bounds = uncertainty_bounds(sets)
    xbar0 = np.concatenate([np.asarray(x0, dtype=float), np.zeros(filt.n_f + modes.m)])
    start = max(math.sqrt(xbar0 @ Pbar @ xbar0) for Pbar in reference.Pbar_list)
    root_norm = max(norm2(sqrtm_spd(Pbar)) for Pbar in reference.Pbar_list)
    forcing = 0.0
    for mode in modes:
        matrices = build_closedloop_matrices(mode, sets.theta_centroid, sets.omega_centroid, filt)
        forcing = max(forcing, norm2(matrices.Bbar) * bounds.D_d + norm2(matrices.Ebar) * r_sup)
    level = 2.0 * root_norm * forcing / lam
    if mu > 1.0:
        contraction = math.exp(-0.5 * lam * tau_d)
        if math.sqrt(mu) * contraction >= 1.0:
            return math.inf
        level = level * (1.0 - contraction) / (1.0 - math.sqrt(mu) * contraction)
    return math.sqrt(mu) * max(start, level)


@dataclass
class CertificateSettings:
    """Tunable constants of a certificate

    :ivar a_star: Contraction split, in (0, 1)
    :ivar a: Second split, 0 < a < a*
    :ivar delta0: Target predictor error bound, the achievable value is used if None
    :ivar strict_norm_bounds: Use max ||I - omega|| instead of the trace bound
    :ivar nu_floor: Lower limit of nu
    :ivar rho_margin: Margin on the empirical reference bounds
    """
    a_star: float = 0.5
    a: float = 0.25
    delta0: Optional[float] = None
    strict_norm_bounds: bool = False
    nu_floor: float = 1e-6
    rho_margin: float = 1.2


# pylint: disable=too-many-instance-attributes
@dataclass
class CertificateReport:
    """Every constant of the stability and performance analysis"""
    feasible: bool
    violation: Optional[str]
    P_list: List[np.ndarray] = field(default_factory=list)
    Pbar_list: List[np.ndarray] = field(default_factory=list)
    Q_list: List[np.ndarray] = field(default_factory=list)
    R_list: List[np.ndarray] = field(default_factory=list)
    S_list: List[np.ndarray] = field(default_factory=list)
    lambda_modes: float = math.nan
    mu_modes: float = math.nan
    lam: float = math.nan
    mu: float = math.nan
    a_star: float = math.nan
    a: float = math.nan
    tau_d: float = math.nan
    Ts: float = math.nan
    alpha_bars: Tuple[float, float, float] = (math.nan, math.nan, math.nan)
    D_theta: float = math.nan
    D_d: float = math.nan
    D_omega: float = math.nan
    D_omega_trace: float = math.nan
    D_omega_norm: float = math.nan
    rho: float = math.nan
    rho_u: float = math.nan
    rho_r: float = math.nan
    rho_ur: float = math.nan
    rho_r_analytic: float = math.nan
    rho_r_empirical: float = math.nan
    rho_ur_empirical: float = math.nan
    delta0: float = math.nan
    delta1: float = math.nan
    delta2: float = math.nan
    nu: float = math.nan
    g: float = math.nan
    kappa_gamma: float = math.nan
    kappa_validated: float = math.nan
    Lambda_Fbar: float = math.nan
    switch_factor: float = math.nan
    ts_satisfied: bool = False
    ts_lhs: float = math.nan
    max_Ts: float = math.nan
    flags: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        """JSON friendly representation"""
        def convert(value):
            if isinstance(value, np.ndarray):
                return value.tolist()
            if isinstance(value, (list, tuple)):
                return [convert(item) for item in value]
            if isinstance(value, float) and not math.isfinite(value):
                return str(value)
            return value
        data = {key: convert(value) for key, value in asdict(self).items()}
        data["lambda"] = data.pop("lam")
        return data


# pylint: disable=too-many-arguments, too-many-locals, too-many-statements
def certify(
        modes: ModeSet,
        sets: UncertaintySets,
        filt: FilterRealization,
        Ts: float,
        signal: SwitchingSignal,
        x0,
        r_sup: float,
        settings: Optional[CertificateSettings] = None,
        empirical: Optional[Tuple[float, float]] = None,
        horizon: Optional[float] = None,
) -> CertificateReport:
    """Compute the complete certificate of a linear scenario

    :param empirical: Simulated (rho_r, rho_ur) including the margin, if available
    :param horizon: Used to count switches for the mu = 1 limit
    """
    settings = settings or CertificateSettings()
    report = CertificateReport(feasible=False, violation=None, a_star=settings.a_star, a=settings.a, Ts=Ts)
    report.flags.append("D_sigma in the sampling-time condition read as D_d")

    mode_result = find_mode_lyapunov(modes)
    if not mode_result.feasible:
        report.violation = "{}: {}".format(CONDITION_MODE, mode_result.violation)
        return report
    report.P_list = mode_result.P_list
    report.lambda_modes, report.mu_modes = mode_result.lam, mode_result.mu

    reference = verify_reference_lyapunov(modes, sets, filt)
    report.Pbar_list = reference.Pbar_list
    report.lam, report.mu = reference.lam, reference.mu
    if not reference.feasible:
        report.violation = reference.violation
        return report

    report.tau_d = max(
        dwell_time(mode_result.lam, mode_result.mu, settings.a_star),
        dwell_time(reference.lam, reference.mu, settings.a_star),
    )
    for Pbar in reference.Pbar_list:
        Q, R, S = extract_Q(Pbar, modes.n)
        report.Q_list.append(Q)
        report.R_list.append(R)
        report.S_list.append(S)

    bounds: UncertaintyBounds = uncertainty_bounds(sets)
    report.D_theta, report.D_d = bounds.D_theta, bounds.D_d
    report.D_omega_trace, report.D_omega_norm = bounds.D_omega, bounds.D_omega_norm
    report.D_omega = bounds.omega_bound(settings.strict_norm_bounds)
    if settings.strict_norm_bounds:
        report.flags.append("strict norm bounds: D_omega = max ||I - omega||")

    n_switches = signal.switches_until(horizon) if horizon is not None else len(signal.switch_times)
    try:
        deltas = compute_deltas(modes, sets, filt, reference, settings.a, settings.a_star, 1.0,
                                n_switches=n_switches, nu_floor=settings.nu_floor)
    except CertificateInfeasible as exc:
        report.violation = "{}: {}".format(exc.condition, exc)
        return report
    report.nu, report.g = deltas.nu, deltas.g
    report.kappa_gamma, report.kappa_validated = deltas.kappa_gamma, deltas.kappa_validated
    report.Lambda_Fbar, report.switch_factor = deltas.Lambda_Fbar, deltas.switch_factor
    if deltas.mu_limit:
        report.flags.append("mu = 1: switching factor evaluated in the limit")
    if deltas.kappa_validated > deltas.kappa_gamma:
        report.flags.append("validated kappa bound used instead of kappa_gamma")

    report.rho_r_analytic = analytic_reference_bounds(reference, modes, filt, sets, x0, r_sup, report.tau_d)
    if empirical is not None:
        report.rho_r_empirical, report.rho_ur_empirical = empirical
    if math.isfinite(report.rho_r_analytic):
        report.rho_r = report.rho_ur = report.rho_r_analytic
    elif empirical is not None:
        report.rho_r, report.rho_ur = empirical
        report.flags.append("empirical reference bounds used")
    else:
        report.violation = "no reference bound available"
        return report

    alpha = alpha_bars(modes, Ts)
    report.alpha_bars = alpha.as_tuple()
    if settings.delta0 is not None:
        delta0 = settings.delta0
    else:
        delta0 = achievable_delta0(alpha, report.D_omega, report.D_theta, report.D_d,
                                   report.rho_r, report.rho_ur, deltas.delta1_gain, deltas.delta2_gain)
        delta0 = max(DELTA0_MARGIN * delta0, DELTA0_FLOOR)
        report.flags.append("delta0 chosen as the achievable value at this Ts")
    report.delta0 = delta0
    report.delta1 = deltas.delta1_gain * delta0
    report.delta2 = deltas.delta2_gain * delta0
    report.rho = report.rho_r + report.delta1
    report.rho_u = report.rho_ur + report.delta2

    if math.isfinite(delta0):
        condition = ts_condition(alpha, report.D_omega, report.D_theta, report.D_d,
                                 report.rho, report.rho_u, delta0, modes=modes)
        report.ts_satisfied, report.ts_lhs, report.max_Ts = condition.satisfied, condition.lhs, condition.max_Ts
    if not report.ts_satisfied:
        report.violation = "{}: Ts={} does not meet the sampling-time condition".format(CONDITION_SAMPLING, Ts)
        return report

    gaps = np.diff(signal.times)
    if gaps.size and np.min(gaps) < report.tau_d - 1e-9:
        report.violation = "{}: switch gap {:.4g} below tau_d {:.4g}".format(
            CONDITION_DWELL, float(np.min(gaps)), report.tau_d)
        return report

    report.feasible = True
    return report


@dataclass
class BoundCheck:
    name: str
    bound: float
    observed: float
    strict: bool = False

    @property
    def margin(self) -> float:
        return self.bound - self.observed

    @property
    def passed(self) -> bool:
        if not math.isfinite(self.bound):
            return False
        return self.observed < self.bound if self.strict else self.observed <= self.bound


@dataclass
class Theorem1Report:
    checks: List[BoundCheck]
    flags: List[str]

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "flags": list(self.flags),
            "bounds": [
                {"name": c.name, "bound": c.bound, "observed": c.observed,
                 "margin": c.margin, "passed": c.passed}
                for c in self.checks
            ],
        }


def theorem1_report(certificate: CertificateReport, observables) -> Theorem1Report:
    """Compare observed sup norms with the certified bounds

    :param observables: Mapping with ``xtilde``, ``x``, ``u``, ``e``, ``e_u`` sup norms
    """
    flags = list(certificate.flags)
    if not certificate.feasible:
        flags.append("certificate infeasible ({}); bounds not guaranteed".format(certificate.violation))
    if not certificate.ts_satisfied:
        flags.append("Ts condition unsatisfied; bounds not guaranteed")
    checks = [
        BoundCheck("xtilde", certificate.delta0, observables["xtilde"], strict=True),
        BoundCheck("x", certificate.rho, observables["x"]),
        BoundCheck("u", certificate.rho_u, observables["u"]),
        BoundCheck("x_ref - x", certificate.delta1, observables["e"]),
        BoundCheck("u_ref - u", certificate.delta2, observables["e_u"]),
    ]
    return Theorem1Report(checks, flags)


def sample_point_bound(certificate: CertificateReport) -> float:
    """alpha3 (D_omega rho_u + D_theta rho + D_d), the predictor error bound at sample instants"""
    return certificate.alpha_bars[2] * (
        certificate.D_omega * certificate.rho_u + certificate.D_theta * certificate.rho + certificate.D_d
    )


def lyapunov_at_switches(times, xbar, modes_active, switch_times, Pbar_list) -> List[float]:
    """Value of the active reference Lyapunov function right after each switch and at t=0"""
    values = []
    times = np.asarray(times)
    for t in [0.0] + list(switch_times):
        index = int(np.searchsorted(times, t - 1e-12))
        state = xbar[index]
        values.append(float(state @ Pbar_list[int(modes_active[index])] @ state))
    return values
