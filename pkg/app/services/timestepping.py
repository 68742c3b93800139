"""配列のタプルに対する古典 RK4。"""
from __future__ import annotations

from typing import Callable, Sequence, Tuple

import numpy as np

Fields = Tuple[np.ndarray, ...]


def axpy(a: float, x: Sequence[np.ndarray], y: Sequence[np.ndarray]) -> Fields:
    """y + a·x を成分ごとに計算する"""
    return tuple(yi + a * xi for xi, yi in zip(x, y))


def rk4_step(u: Fields, dt: float, rhs: Callable[[Fields], Fields]) -> Fields:
    k1 = rhs(u)
    k2 = rhs(axpy(0.5 * dt, k1, u))
    k3 = rhs(axpy(0.5 * dt, k2, u))
    k4 = rhs(axpy(dt, k3, u))
    return tuple(
        ui + dt / 6.0 * (a + 2.0 * b + 2.0 * c + d)
        for ui, a, b, c, d in zip(u, k1, k2, k3, k4)
    )


def steps_for(T: float, dt_max: float) -> Tuple[int, float]:
    """[0, T] をちょうど割り切る刻み数と刻み幅"""
    if T <= 0.0:
        return 0, 0.0
    n = max(1, int(np.ceil(T / dt_max - 1e-12)))
    return n, T / n
