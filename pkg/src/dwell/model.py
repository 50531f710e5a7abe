"""Switched uncertain plant

Modes, uncertainty polytopes, switching signals and the true uncertainty
trajectories the simulator feeds into the plant. Polytopes are stored as
vertex lists, every function evaluated over them in dwell is affine or convex
so vertex enumeration is exact.
"""

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linprog

from .exceptions import DimensionError, RankError
from .linalg import as_matrix, as_vector, bperp, matrix_rank, norm2, pinv

# Grid density for trajectory membership checks (points per second)
MEMBERSHIP_GRID = 100
ALIGNMENT_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class ModeDefinition:
    """One LTI mode of the switched plant

    :ivar A: n x n state matrix
    :ivar B: n x m input matrix, full column rank
    :ivar C: m x n output matrix
    :ivar k: m x m feedforward gain
    """
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    k: np.ndarray

    def __post_init__(self):
        A = as_matrix(self.A, "A")
        B = as_matrix(self.B, "B")
        C = as_matrix(self.C, "C")
        k = as_matrix(self.k, "k")
        n, m = B.shape
        if A.shape != (n, n):
            raise DimensionError("A has shape {}, expected {}".format(A.shape, (n, n)))
        if C.shape != (m, n):
            raise DimensionError("C has shape {}, expected {}".format(C.shape, (m, n)))
        if k.shape != (m, m):
            raise DimensionError("k has shape {}, expected {}".format(k.shape, (m, m)))
        if m > n:
            raise DimensionError("more inputs than states")
        for name, value in (("A", A), ("B", B), ("C", C), ("k", k)):
            object.__setattr__(self, name, value)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def full_rank(self) -> bool:
        return matrix_rank(self.B) == self.m

    @cached_property
    def Bperp(self) -> np.ndarray:
        return bperp(self.B)

    @cached_property
    def Bvee(self) -> np.ndarray:
        """[B, B_perp], invertible by construction"""
        return np.hstack([self.B, self.Bperp])

    @cached_property
    def Bpinv(self) -> np.ndarray:
        return pinv(self.B)


@dataclass(frozen=True, eq=False)
class ModeSet:
    """Ordered family of modes with uniform dimensions"""
    modes: Tuple[ModeDefinition, ...]

    def __post_init__(self):
        modes = tuple(self.modes)
        if not modes:
            raise DimensionError("a mode set needs at least one mode")
        n, m = modes[0].n, modes[0].m
        for index, mode in enumerate(modes):
            if (mode.n, mode.m) != (n, m):
                raise DimensionError(
                    "mode {} has dimensions {}, expected {}".format(index, (mode.n, mode.m), (n, m))
                )
        object.__setattr__(self, "modes", modes)

    @property
    def n(self) -> int:
        return self.modes[0].n

    @property
    def m(self) -> int:
        return self.modes[0].m

    def __len__(self):
        return len(self.modes)

    def __getitem__(self, index) -> ModeDefinition:
        return self.modes[index]

    def __iter__(self):
        return iter(self.modes)


@dataclass(frozen=True, eq=False)
class UncertaintySets:
    """Vertex lists of the polytopes Theta, Delta and Omega"""
    theta_vertices: Tuple[np.ndarray, ...]
    d_vertices: Tuple[np.ndarray, ...]
    omega_vertices: Tuple[np.ndarray, ...]

    def __post_init__(self):
        theta = tuple(as_matrix(v, "theta vertex") for v in self.theta_vertices)
        d = tuple(as_vector(v, name="d vertex") for v in self.d_vertices)
        omega = tuple(as_matrix(v, "omega vertex") for v in self.omega_vertices)
        if not theta or not d or not omega:
            raise DimensionError("every polytope needs at least one vertex")
        n, m = theta[0].shape
        if any(v.shape != (n, m) for v in theta):
            raise DimensionError("theta vertices differ in shape")
        if any(v.shape != (m,) for v in d):
            raise DimensionError("d vertices must have length {}".format(m))
        if any(v.shape != (m, m) for v in omega):
            raise DimensionError("omega vertices must be {}x{}".format(m, m))
        object.__setattr__(self, "theta_vertices", theta)
        object.__setattr__(self, "d_vertices", d)
        object.__setattr__(self, "omega_vertices", omega)

    @classmethod
    def nominal(cls, n: int, m: int) -> "UncertaintySets":
        """Theta = {0}, Delta = {0}, Omega = {I}"""
        return cls((np.zeros((n, m)),), (np.zeros(m),), (np.eye(m),))

    @property
    def theta_centroid(self) -> np.ndarray:
        return np.mean(self.theta_vertices, axis=0)

    @property
    def omega_centroid(self) -> np.ndarray:
        return np.mean(self.omega_vertices, axis=0)

    def parameter_vertices(self):
        """All vertices (theta, omega) of Theta x Omega"""
        return [(theta, omega) for theta in self.theta_vertices for omega in self.omega_vertices]


@dataclass(frozen=True)
class UncertaintyBounds:
    """Bounds of the uncertainty polytopes

    :ivar D_theta: max ||theta||
    :ivar D_d: max ||d||
    :ivar D_omega: max |trace(omega - I)|
    :ivar D_omega_norm: max ||I - omega||, the induced norm variant
    """
    D_theta: float
    D_d: float
    D_omega: float
    D_omega_norm: float

    def omega_bound(self, strict: bool = False) -> float:
        return self.D_omega_norm if strict else self.D_omega


def uncertainty_bounds(sets: UncertaintySets) -> UncertaintyBounds:
    """Maxima over the vertices

    Norms and absolute traces are convex so their maxima over a polytope are
    attained at a vertex.
    """
    m = sets.omega_vertices[0].shape[0]
    return UncertaintyBounds(
        D_theta=max(norm2(v) for v in sets.theta_vertices),
        D_d=max(norm2(v) for v in sets.d_vertices),
        D_omega=max(abs(float(np.trace(v - np.eye(m)))) for v in sets.omega_vertices),
        D_omega_norm=max(norm2(np.eye(m) - v) for v in sets.omega_vertices),
    )


def in_hull(point, vertices: Sequence[np.ndarray], tolerance: float = 1e-7) -> bool:
    """Check whether ``point`` is a convex combination of ``vertices``

    Solved as a linear feasibility problem.
    """
    points = np.array([np.asarray(v, dtype=float).reshape(-1) for v in vertices])
    target = np.asarray(point, dtype=float).reshape(-1)
    if points.shape[0] == 1:
        return bool(np.allclose(points[0], target, atol=tolerance))
    count = points.shape[0]
    result = linprog(
        c=np.zeros(count),
        A_eq=np.vstack([points.T, np.ones((1, count))]),
        b_eq=np.concatenate([target, [1.0]]),
        bounds=[(0.0, None)] * count,
        method="highs",
    )
    if result.status != 0:
        return False
    residual = points.T @ result.x - target
    return bool(np.max(np.abs(residual), initial=0.0) <= tolerance * max(1.0, np.max(np.abs(points))))


def strictly_diagonally_dominant(M: np.ndarray) -> bool:
    diagonal = np.abs(np.diag(M))
    off_diagonal = np.sum(np.abs(M), axis=1) - diagonal
    return bool(np.all(diagonal > off_diagonal))


@dataclass(frozen=True, eq=False)
class SwitchingSignal:
    """Switch events (t_i, mode index), the first one at t = 0"""
    events: Tuple[Tuple[float, int], ...] = ((0.0, 0),)

    def __post_init__(self):
        events = tuple((float(t), int(mode)) for t, mode in self.events)
        if not events:
            events = ((0.0, 0),)
        object.__setattr__(self, "events", events)

    @property
    def times(self) -> List[float]:
        return [t for t, _ in self.events]

    @property
    def switch_times(self) -> List[float]:
        """Times of actual switches, t_0 excluded"""
        return self.times[1:]

    def mode_at(self, t: float) -> int:
        """Active mode, a switch at t_i is active from t_i on"""
        mode = self.events[0][1]
        for time, index in self.events:
            if time <= t + ALIGNMENT_TOLERANCE:
                mode = index
            else:
                break
        return mode

    def switches_until(self, horizon: float) -> int:
        return sum(1 for t in self.switch_times if t <= horizon)


# Uncertainty trajectories

@dataclass(frozen=True)
class ConstantShape:
    """Path parameter held at ``level``"""
    level: float = 0.0

    def __call__(self, t):
        return np.full_like(np.asarray(t, dtype=float), self.level)


@dataclass(frozen=True)
class SinusoidShape:
    """Path parameter 0.5 (1 + sin(2 pi f t + phase)), always in [0, 1]"""
    frequency: float = 1.0
    phase: float = 0.0

    def __call__(self, t):
        return 0.5 * (1.0 + np.sin(2.0 * np.pi * self.frequency * np.asarray(t, dtype=float) + self.phase))


@dataclass(frozen=True)
class RampHoldShape:
    """Linear ramp from 0 to 1 between ``start`` and ``start + duration``, then held"""
    start: float = 0.0
    duration: float = 1.0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.duration <= 0:
            return (t >= self.start).astype(float)
        return np.clip((t - self.start) / self.duration, 0.0, 1.0)


@dataclass(frozen=True, eq=False)
class FilteredNoiseShape:
    """First order filtered noise clipped to [0, 1]

    The samples are drawn once on a fixed grid and linearly interpolated, so
    evaluations at integration stage times are deterministic.
    """
    times: np.ndarray
    values: np.ndarray

    @classmethod
    def generate(cls, rng: np.random.Generator, horizon: float, bandwidth: float = 1.0,
                 intensity: float = 0.5, dt: float = 0.01) -> "FilteredNoiseShape":
        """Draw a sample path

        :param rng: Random generator
        :param horizon: Length of the path in seconds
        :param bandwidth: Filter corner in rad/s
        :param intensity: Standard deviation of the driving noise
        :param dt: Grid step
        """
        count = max(2, int(math.ceil(horizon / dt)) + 2)
        times = np.arange(count) * dt
        decay = math.exp(-bandwidth * dt)
        values = np.empty(count)
        spread = intensity * math.sqrt(1.0 - decay ** 2)
        level = 0.5
        for index in range(count):
            values[index] = level
            level = decay * level + (1.0 - decay) * 0.5 + spread * rng.standard_normal()
            level = min(1.0, max(0.0, level))
        return cls(times, values)

    def __call__(self, t):
        return np.interp(np.asarray(t, dtype=float), self.times, self.values)


@dataclass(frozen=True, eq=False)
class VertexPath:
    """Segment between two convex combinations of polytope vertices

    The point at time t is (1 - s(t)) * start + s(t) * end with s(t) in
    [0, 1], so the path never leaves the polytope.

    :ivar start: Convex weights over the vertices
    :ivar end: Convex weights over the vertices
    :ivar shape: Path parameter s(t)
    """
    start: np.ndarray
    end: np.ndarray
    shape: object = field(default_factory=ConstantShape)

    def __post_init__(self):
        for name in ("start", "end"):
            weights = as_vector(getattr(self, name), name=name)
            if np.any(weights < -1e-12) or abs(weights.sum() - 1.0) > 1e-9:
                raise DimensionError("{} weights must be convex".format(name))
            object.__setattr__(self, name, weights)
        if self.start.shape != self.end.shape:
            raise DimensionError("start and end weights differ in length")

    @classmethod
    def fixed(cls, weights) -> "VertexPath":
        weights = as_vector(weights)
        return cls(weights, weights, ConstantShape())

    def weights(self, t: float) -> np.ndarray:
        s = float(self.shape(t))
        return (1.0 - s) * self.start + s * self.end

    def evaluate(self, t: float, vertices: Sequence[np.ndarray]) -> np.ndarray:
        weights = self.weights(t)
        return sum(w * v for w, v in zip(weights, vertices))


def vertex_weights(count: int, selection) -> np.ndarray:
    """Convex weights from a vertex index, ``"centroid"`` or explicit weights"""
    if isinstance(selection, str):
        if selection == "centroid":
            return np.full(count, 1.0 / count)
        raise DimensionError("unknown vertex selection {!r}".format(selection))
    if isinstance(selection, (int, np.integer)):
        if not 0 <= selection < count:
            raise DimensionError("vertex index {} out of range".format(selection))
        weights = np.zeros(count)
        weights[selection] = 1.0
        return weights
    weights = as_vector(selection)
    if weights.shape[0] != count:
        raise DimensionError("expected {} vertex weights".format(count))
    return weights


@dataclass(frozen=True, eq=False)
class UncertaintyTrajectory:
    """True uncertainty realization

    :ivar sets: The polytopes the trajectory lives in
    :ivar theta_path: Path through the Theta vertices
    :ivar d_path: Path through the Delta vertices
    :ivar omega_weights: Per mode convex weights over the Omega vertices
    """
    sets: UncertaintySets
    theta_path: VertexPath
    d_path: VertexPath
    omega_weights: Tuple[np.ndarray, ...]

    @classmethod
    def nominal(cls, sets: UncertaintySets, n_modes: int) -> "UncertaintyTrajectory":
        """Constant centroid trajectory"""
        return cls(
            sets,
            VertexPath.fixed(vertex_weights(len(sets.theta_vertices), "centroid")),
            VertexPath.fixed(vertex_weights(len(sets.d_vertices), "centroid")),
            tuple(vertex_weights(len(sets.omega_vertices), "centroid") for _ in range(n_modes)),
        )

    def theta(self, t: float) -> np.ndarray:
        return self.theta_path.evaluate(t, self.sets.theta_vertices)

    def d(self, t: float) -> np.ndarray:
        return self.d_path.evaluate(t, self.sets.d_vertices)

    def omega(self, mode: int) -> np.ndarray:
        weights = self.omega_weights[mode % len(self.omega_weights)]
        return sum(w * v for w, v in zip(weights, self.sets.omega_vertices))


def check_trajectory(trajectory: UncertaintyTrajectory, horizon: float, n_modes: int) -> List[str]:
    """Membership of the trajectory in its polytopes on a 100 points per second grid"""
    violations = []
    sets = trajectory.sets
    grid = np.linspace(0.0, horizon, max(2, int(math.ceil(horizon * MEMBERSHIP_GRID)) + 1))
    for t in grid:
        if not in_hull(trajectory.theta(t), sets.theta_vertices):
            violations.append("theta(t) leaves Theta at t={:.4f}".format(t))
            break
    for t in grid:
        if not in_hull(trajectory.d(t), sets.d_vertices):
            violations.append("d(t) leaves Delta at t={:.4f}".format(t))
            break
    for mode in range(n_modes):
        if not in_hull(trajectory.omega(mode), sets.omega_vertices):
            violations.append("omega of mode {} is outside Omega".format(mode))
    return violations


def plant_deriv(mode: ModeDefinition, x, u, theta, d, omega) -> np.ndarray:
    """A x + B (omega u + theta^T x + d)"""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    theta = np.asarray(theta, dtype=float)
    d = np.asarray(d, dtype=float)
    omega = np.asarray(omega, dtype=float)
    if x.shape != (mode.n,) or u.shape != (mode.m,) or d.shape != (mode.m,):
        raise DimensionError("state, input or disturbance has the wrong length")
    if theta.shape != (mode.n, mode.m) or omega.shape != (mode.m, mode.m):
        raise DimensionError("theta or omega has the wrong shape")
    return mode.A @ x + mode.B @ (omega @ u + theta.T @ x + d)


def _aligned(t: float, Ts: float) -> bool:
    ratio = t / Ts
    return abs(ratio - round(ratio)) <= ALIGNMENT_TOLERANCE * max(1.0, abs(ratio))


# pylint: disable=too-many-arguments, too-many-branches
def validate_scenario(
        modes: ModeSet,
        sets: UncertaintySets,
        signal: SwitchingSignal,
        Ts: float,
        tau_d: Optional[float] = None,
        trajectory: Optional[UncertaintyTrajectory] = None,
        horizon: Optional[float] = None,
) -> List[str]:
    """List every violated structural condition, an empty list means ok

    :param modes: The plant modes
    :param sets: The uncertainty polytopes
    :param signal: The switching signal
    :param Ts: Adaptation sampling time
    :param tau_d: Dwell time of an attached certificate, skipped if None
    :param trajectory: Optional uncertainty realization checked on a grid
    :param horizon: Length of the trajectory check
    """
    violations = []
    for index, mode in enumerate(modes):
        try:
            if not mode.full_rank:
                violations.append("mode {}: B is not full column rank".format(index))
        except RankError:
            violations.append("mode {}: B is not full column rank".format(index))

    theta_shape = sets.theta_vertices[0].shape
    if theta_shape != (modes.n, modes.m):
        violations.append("Theta vertices are {}, expected {}".format(theta_shape, (modes.n, modes.m)))

    times = signal.times
    if not times or abs(times[0]) > ALIGNMENT_TOLERANCE:
        violations.append("switching signal must start at t=0")
    for (t_prev, _), (t_next, _) in zip(signal.events, signal.events[1:]):
        if t_next <= t_prev:
            violations.append("switch times not strictly increasing at t={}".format(t_next))
    for t, mode_index in signal.events:
        if not 0 <= mode_index < len(modes):
            violations.append("switch at t={} selects unknown mode {}".format(t, mode_index))
        if Ts > 0 and not _aligned(t, Ts):
            violations.append("switch at t={} is not a multiple of Ts={}".format(t, Ts))
    if tau_d is not None:
        for t_prev, t_next in zip(times, times[1:]):
            if t_next - t_prev < tau_d - ALIGNMENT_TOLERANCE:
                violations.append(
                    "dwell violated between t={} and t={} (gap {:.6g} < tau_d {:.6g})".format(
                        t_prev, t_next, t_next - t_prev, tau_d)
                )

    m = modes.m
    for index, omega in enumerate(sets.omega_vertices):
        if not strictly_diagonally_dominant(omega):
            violations.append("omega vertex {} is not strictly diagonally dominant".format(index))
    if theta_shape == (modes.n, modes.m) and not in_hull(np.zeros(theta_shape), sets.theta_vertices):
        violations.append("0 is not in Theta")
    if not in_hull(np.zeros(m), sets.d_vertices):
        violations.append("0 is not in Delta")
    if sets.omega_vertices[0].shape == (m, m) and not in_hull(np.eye(m), sets.omega_vertices):
        violations.append("I is not in Omega")

    if trajectory is not None and horizon is not None:
        violations.extend(check_trajectory(trajectory, horizon, len(modes)))
    return violations


COMMAND_KINDS = ("constant", "step", "sine", "doublet")


@dataclass(frozen=True, eq=False)
class CommandSignal:
    """Reference input r(t)

    :ivar kind: ``constant``, ``step``, ``sine`` or ``doublet``
    :ivar amplitude: Vector amplitude
    :ivar start: Start time of step and doublet
    :ivar frequency: Sine frequency in Hz
    :ivar width: Half width of a doublet in seconds
    """
    kind: str
    amplitude: np.ndarray
    start: float = 0.0
    frequency: float = 0.5
    width: float = 1.0

    def __post_init__(self):
        if self.kind not in COMMAND_KINDS:
            raise DimensionError("unknown command kind {!r}".format(self.kind))
        object.__setattr__(self, "amplitude", as_vector(self.amplitude, name="amplitude"))

    def __call__(self, t: float) -> np.ndarray:
        if self.kind == "constant":
            return self.amplitude.copy()
        if self.kind == "step":
            return self.amplitude * (1.0 if t >= self.start else 0.0)
        if self.kind == "sine":
            return self.amplitude * math.sin(2.0 * math.pi * self.frequency * t)
        if t < self.start or t >= self.start + 2.0 * self.width:
            return np.zeros_like(self.amplitude)
        return self.amplitude * (1.0 if t < self.start + self.width else -1.0)

    def sup_norm(self) -> float:
        return norm2(self.amplitude)
