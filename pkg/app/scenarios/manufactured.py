"""速度場を解析的に与えた製造解。

id=0: ζ = a cos(k₀x) 上の回転流。流れ関数 A = (1+z)e^z (sin k₀x + 0.3 cos 2k₀x)
      による面内成分と V_y = cos(k₀x) e^z の横断成分に、U∥ₓ の平均を打ち消す一様流を加える。
      A(x,-1) = 0 なので底面で w = 0。
id=1: 平坦な帯上の単一モードのポテンシャル流 φ = cos(k₀x) cosh(√μk₀(1+z))/cosh(√μk₀)。

ω と ψ は厳密な速度場から求める。
"""
from __future__ import annotations

from typing import Tuple

import numpy as np

from app.models import InitialCondition, Params
from app.services import spectral
from app.services.divcurl import grid_for
from app.services.dynamics import State
from app.services.geometry import build_geometry, tangential_trace, vorticity_of


def rotational_velocity(zeta: np.ndarray, params: Params) -> np.ndarray:
    grid = grid_for(params)
    X, Z = grid.mesh()
    k0 = grid.k0
    eps, smu = params.eps, np.sqrt(params.mu)

    a = np.sin(k0 * X) + 0.3 * np.cos(2 * k0 * X)
    a_x = k0 * np.cos(k0 * X) - 0.6 * k0 * np.sin(2 * k0 * X)
    g = (1.0 + Z) * np.exp(Z)
    g_z = (2.0 + Z) * np.exp(Z)
    zeta_x = spectral.dx(zeta, grid)
    htilde = (1.0 + eps * zeta)[:, None]
    sigma_x = eps * (1.0 + Z) * zeta_x[:, None]

    A_x = g * a_x
    A_z = g_z * a
    Vx = -(A_z / htilde) / smu
    w = smu * (A_x - sigma_x * A_z / htilde)
    Vy = np.cos(k0 * X) * np.exp(Z)
    return np.stack([Vx, Vy, w])


def flat_potential_velocity(params: Params) -> np.ndarray:
    grid = grid_for(params)
    X, Z = grid.mesh()
    k0, smu = grid.k0, np.sqrt(params.mu)
    c = np.cosh(smu * k0)
    Vx = -k0 * np.sin(k0 * X) * np.cosh(smu * k0 * (1.0 + Z)) / c
    w = smu * k0 * np.cos(k0 * X) * np.sinh(smu * k0 * (1.0 + Z)) / c
    return np.stack([Vx, np.zeros_like(Vx), w])


def manufactured_fields(manufactured_id: int, amplitude: float, params: Params) -> Tuple[State, np.ndarray]:
    """(初期状態, 厳密な速度 (V_x, V_y, w))"""
    grid = grid_for(params)
    if manufactured_id == 0:
        zeta = amplitude * np.cos(grid.k0 * grid.x)
        U = rotational_velocity(zeta, params)
    elif manufactured_id == 1:
        zeta = grid.surface_zeros()
        U = flat_potential_velocity(params)
    else:
        raise ValueError(f"未知の製造解です: {manufactured_id}")

    G = build_geometry(zeta, params.eps, params.mu, grid, params.h_min)
    ux, _ = tangential_trace(U, G)
    U[0] = U[0] - spectral.mean(ux)
    ux = ux - spectral.mean(ux)
    psi = spectral.inverse_dx(ux, grid)
    omega = vorticity_of(U, G) if manufactured_id == 0 else grid.vector_zeros()
    return State(t=0.0, zeta=zeta, psi=psi, omega=omega), U


def manufactured_state(ic: InitialCondition, params: Params) -> State:
    state, _ = manufactured_fields(ic.manufactured_id, ic.amplitude, params)
    return state
