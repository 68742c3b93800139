"""検査用の滑らかなランダム状態（低波数・低次多項式）。"""
from __future__ import annotations

import numpy as np

from app.models import Params
from app.services.divcurl import grid_for, project_div_free
from app.services.dynamics import State
from app.services.geometry import build_geometry


def random_surface_field(rng: np.random.Generator, params: Params, amplitude: float, kmax: int = 3) -> np.ndarray:
    grid = grid_for(params)
    f = grid.surface_zeros()
    for k in range(1, kmax + 1):
        a, b = rng.uniform(-1.0, 1.0, size=2)
        f += (a * np.cos(k * grid.k0 * grid.x) + b * np.sin(k * grid.k0 * grid.x)) / k ** 2
    return amplitude * f


def random_volume_field(rng: np.random.Generator, params: Params, amplitude: float, kmax: int = 2, degree: int = 2) -> np.ndarray:
    grid = grid_for(params)
    X, Z = grid.mesh()
    F = grid.volume_zeros()
    for k in range(0, kmax + 1):
        a, b = rng.uniform(-1.0, 1.0, size=2)
        vertical = np.polynomial.polynomial.polyval(Z, rng.uniform(-1.0, 1.0, size=degree + 1))
        F += (a * np.cos(k * grid.k0 * X) + b * np.sin(k * grid.k0 * X)) * vertical / (1 + k) ** 2
    return amplitude * F


def random_state(
    rng: np.random.Generator,
    params: Params,
    *,
    zeta_amplitude: float = 0.05,
    psi_amplitude: float = 0.1,
    vorticity: float = 0.0,
    transverse: bool = False,
) -> State:
    """vorticity > 0 なら ω₂ を、transverse なら ω₁ も入れて射影する"""
    grid = grid_for(params)
    zeta = random_surface_field(rng, params, zeta_amplitude)
    psi = random_surface_field(rng, params, psi_amplitude)
    omega = grid.vector_zeros()
    if vorticity > 0.0:
        omega[1] = random_volume_field(rng, params, vorticity)
        if transverse:
            omega[0] = random_volume_field(rng, params, vorticity)
            G = build_geometry(zeta, params.eps, params.mu, grid, params.h_min)
            omega = project_div_free(omega, G, params)
    return State(t=0.0, zeta=zeta, psi=psi, omega=omega)
