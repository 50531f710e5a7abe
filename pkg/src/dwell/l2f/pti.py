"""Programmed test inputs

Phase optimized multisines on the visible control surfaces. Every surface
gets its own subset of harmonics of the base frequency, so the signals are
zero mean and mutually orthogonal over whole base periods. Phases follow
Schroeder's rule to keep the peak factor low.
"""

import math
from dataclasses import dataclass
from typing import Dict, Sequence, Tuple

import numpy as np

from ..exceptions import ScenarioError
from .aircraft import SURFACES


@dataclass(frozen=True, eq=False)
class PtiConfig:
    """Multisine design

    :ivar base_period: Period T of the fundamental, seconds
    :ivar harmonics: Per surface the harmonic numbers k (frequencies k / T)
    :ivar amplitudes: Per surface RMS amplitude, rad
    :ivar start: Injection start time
    """
    base_period: float
    harmonics: Dict[str, Tuple[int, ...]]
    amplitudes: Dict[str, float]
    start: float = 0.0

    def __post_init__(self):
        if self.base_period <= 0:
            raise ScenarioError("PTI base period must be positive")
        seen = {}
        for surface, lines in self.harmonics.items():
            if surface not in SURFACES:
                raise ScenarioError("unknown PTI surface {!r}".format(surface))
            for line in lines:
                if line < 1:
                    raise ScenarioError("PTI harmonics must be positive integers")
                if line in seen:
                    raise ScenarioError("harmonic {} assigned to both {} and {}".format(line, seen[line], surface))
                seen[line] = surface
        object.__setattr__(self, "harmonics", {key: tuple(int(k) for k in value)
                                               for key, value in self.harmonics.items()})

    @classmethod
    def interleaved(cls, base_period: float, count: int, amplitude: float,
                    surfaces: Sequence[str] = SURFACES, first: int = 1) -> "PtiConfig":
        """Distribute harmonics first, first + 1, ... round robin over the surfaces"""
        lines = {surface: tuple(first + index for index in range(offset, count * len(surfaces), len(surfaces)))
                 for offset, surface in enumerate(surfaces)}
        return cls(base_period, lines, {surface: amplitude for surface in surfaces})

    @property
    def total(self) -> int:
        return sum(len(lines) for lines in self.harmonics.values())


def schroeder_phases(lines: Sequence[int], total: int) -> np.ndarray:
    """phi_k = -pi k (k - 1) / N"""
    lines = np.asarray(lines, dtype=float)
    return -math.pi * lines * (lines - 1.0) / max(total, 1)


def pti_multisine(t: float, config: PtiConfig) -> np.ndarray:
    """Perturbations (delta_a, delta_e, delta_r) at time t, zero before ``config.start``"""
    output = np.zeros(len(SURFACES))
    if t < config.start:
        return output
    tau = t - config.start
    for index, surface in enumerate(SURFACES):
        lines = config.harmonics.get(surface, ())
        amplitude = config.amplitudes.get(surface, 0.0)
        if not lines or amplitude == 0.0:
            continue
        k = np.asarray(lines, dtype=float)
        # RMS of the sum equals the configured amplitude
        component = amplitude * math.sqrt(2.0 / len(lines))
        phases = schroeder_phases(lines, config.total)
        output[index] = component * float(np.sum(np.sin(2.0 * math.pi * k * tau / config.base_period + phases)))
    return output


def pti_signals(times, config: PtiConfig) -> np.ndarray:
    """Evaluate :func:`pti_multisine` on a time grid, shape (len(times), 3)"""
    return np.array([pti_multisine(t, config) for t in times])
