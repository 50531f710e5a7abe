"""Fixed step integration"""

from typing import Optional

import numpy as np


def rk4_step(func, t: float, y: np.ndarray, h: float) -> np.ndarray:
    """One classical Runge-Kutta step of y' = func(t, y)"""
    k1 = func(t, y)
    k2 = func(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = func(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = func(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def steps_per(period: float, h: float, tolerance: float = 1e-9) -> Optional[int]:
    """Number of steps h in ``period``, None if it is not an integer multiple"""
    ratio = period / h
    count = int(round(ratio))
    if count < 1 or abs(ratio - count) > tolerance * max(1.0, ratio):
        return None
    return count
