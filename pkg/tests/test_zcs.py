import numpy as np
import pytest

from app.services import spectral
from app.services.divcurl import generalized_DN, grid_for
from app.services.dynamics import State, step
from app.services.zcs import cheb_diff_matrix, classical_dn, fourier_diff_matrix, zcs_step

from .conftest import make_params

pytestmark = pytest.mark.unit


def _tight(**overrides):
    base = dict(eps=0.2, mu=0.5, nx=32, nz=16, krylov_rtol=1e-12, krylov_maxiter=400)
    base.update(overrides)
    return make_params(**base)


def test_differentiation_matrices():
    """Fourier 行列は sin の微分、Chebyshev 行列は [-1,0] 上の z² の微分を厳密に与える。"""
    n = 16
    x = np.arange(n) * 2.0 * np.pi / n
    assert np.max(np.abs(fourier_diff_matrix(n, 2.0 * np.pi) @ np.sin(2 * x) - 2 * np.cos(2 * x))) < 1e-12
    nz = 9
    z = 0.5 * (np.cos(np.pi * np.arange(nz) / (nz - 1)) - 1.0)
    assert np.max(np.abs(cheb_diff_matrix(nz) @ z ** 2 - 2 * z)) < 1e-12


def test_classical_dn_flat_symbol():
    p = _tight(eps=0.1)
    grid = grid_for(p)
    dn = classical_dn(grid.surface_zeros(), np.cos(2 * grid.x), p)
    expected = spectral.dn_symbol(p.mu)(2.0) * np.cos(2 * grid.x)
    assert np.max(np.abs(dn - expected)) < 1e-10


def test_generalized_dn_matches_classical_without_vorticity():
    """ω = 0 では一般化 DN と直接解法の DN が一致する。"""
    p = _tight()
    grid = grid_for(p)
    zeta = 0.5 * np.cos(grid.x) + 0.2 * np.sin(2 * grid.x)
    psi = 0.3 * np.sin(grid.x) - 0.1 * np.cos(3 * grid.x)
    g = generalized_DN(zeta, psi, grid.vector_zeros(), p)
    c = classical_dn(zeta, psi, p)
    assert np.max(np.abs(g - (c - np.mean(c)))) < 1e-10


def test_irrotational_steps_agree():
    """渦なしでは一般化ステッパと古典 ZCS ステッパの軌道が一致する。"""
    p = _tight(eps=0.1)
    grid = grid_for(p)
    zeta = 0.3 * np.cos(grid.x)
    psi = 0.2 * np.sin(grid.x)
    s = State(t=0.0, zeta=zeta, psi=psi, omega=grid.vector_zeros())
    z, q = zeta, psi
    for i in range(5):
        s = step(s, p, 0.05, step_index=i + 1)
        z, q = zcs_step(z, q, p, 0.05)
    assert np.max(np.abs(s.zeta - z)) < 1e-10
    assert np.max(np.abs(s.psi - q)) < 1e-10
    assert not np.any(s.omega)
