"""ζ = a cos(mk₀x), ψ = b sin(mk₀x), ω = 0"""
import numpy as np

from app.models import InitialCondition, Params
from app.services.divcurl import grid_for
from app.services.dynamics import State


def standing_wave_state(ic: InitialCondition, params: Params) -> State:
    grid = grid_for(params)
    kx = ic.mode * grid.k0 * grid.x
    zeta = ic.amplitude * np.cos(kx)
    psi = ic.potential * np.sin(kx)
    return State(t=0.0, zeta=zeta, psi=psi, omega=grid.vector_zeros())
