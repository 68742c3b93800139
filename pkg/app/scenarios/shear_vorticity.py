"""一様または線形なシア渦度を持つ状態。

component=1 は横断成分 ω₁（V_y のシア）、component=2 は面内成分 ω₂。
横断成分は発散ゼロ空間へ射影してから返す（ω₃ が補われる）。
"""
import numpy as np

from app.models import InitialCondition, Params
from app.services.divcurl import grid_for, project_div_free
from app.services.dynamics import State
from app.services.geometry import build_geometry


def shear_profile(z: np.ndarray, profile: str) -> np.ndarray:
    if profile == "uniform":
        return np.ones_like(z)
    if profile == "linear":
        return 1.0 + z
    raise ValueError(f"未知の渦度分布です: {profile}")


def shear_vorticity_state(ic: InitialCondition, params: Params) -> State:
    grid = grid_for(params)
    kx = ic.mode * grid.k0 * grid.x
    zeta = ic.amplitude * np.cos(kx)
    psi = ic.potential * np.sin(kx)
    omega = grid.vector_zeros()
    omega[ic.component - 1] = ic.strength * np.broadcast_to(shear_profile(grid.z, ic.profile), (grid.nx, grid.nz))
    if ic.component == 1:
        G = build_geometry(zeta, params.eps, params.mu, grid, params.h_min)
        omega = project_div_free(omega, G, params)
    return State(t=0.0, zeta=zeta, psi=psi, omega=omega)
