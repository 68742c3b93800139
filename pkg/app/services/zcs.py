"""渦なし Zakharov-Craig-Sulem 系の参照実装。

Dirichlet-Neumann 作用素は Krylov 反復を使わず、コロケーション系の
行列を陽に組み立てて LU で直接解く。x 方向の微分行列は三角補間の
公式から作る。
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from app.errors import DepthVanishes
from app.models import Params
from app.services import spectral
from app.services.divcurl import grid_for
from app.services.spectral import Grid
from app.services.timestepping import rk4_step

logger = logging.getLogger(__name__)


@lru_cache(maxsize=8)
def fourier_diff_matrix(n: int, Lx: float) -> np.ndarray:
    """偶数 n の周期スペクトル微分行列（Nyquist 成分の微分は 0）"""
    h = 2.0 * np.pi / n
    col = np.zeros(n)
    j = np.arange(1, n)
    col[1:] = 0.5 * (-1.0) ** j / np.tan(j * h / 2.0)
    D = la.toeplitz(col, -col)
    return D * (2.0 * np.pi / Lx)


@lru_cache(maxsize=8)
def cheb_diff_matrix(nz: int) -> np.ndarray:
    """[-1,0] 上の Chebyshev-Gauss-Lobatto 微分行列（z_0 = 0）"""
    n = nz - 1
    t = np.cos(np.pi * np.arange(nz) / n)
    c = np.ones(nz)
    c[0] = c[-1] = 2.0
    c = c * (-1.0) ** np.arange(nz)
    T = np.tile(t, (nz, 1)).T
    dT = T - T.T
    D = np.outer(c, 1.0 / c) / (dT + np.eye(nz))
    D = D - np.diag(np.sum(D, axis=1))
    return 2.0 * D


@dataclass(frozen=True)
class ClassicalDN:
    """ζ を固定した Dirichlet-Neumann 作用素"""

    grid: Grid
    eps: float
    mu: float
    zeta_x: np.ndarray
    lu: Tuple[np.ndarray, np.ndarray]
    ops: Tuple[sp.csr_matrix, sp.csr_matrix]

    def apply(self, psi: np.ndarray) -> np.ndarray:
        nx, nz = self.grid.nx, self.grid.nz
        b = np.zeros(nx * nz)
        b[0::nz] = psi
        phi = la.lu_solve(self.lu, b).reshape(nx, nz)
        DXs, DZs = self.ops
        phix = (DXs @ phi.ravel()).reshape(nx, nz)[:, 0]
        phiz = (DZs @ phi.ravel()).reshape(nx, nz)[:, 0]
        return (-self.eps * self.mu * self.zeta_x * phix + phiz) / self.mu


def build_classical_dn(zeta: np.ndarray, eps: float, mu: float, grid: Grid, h_min: float = 0.05) -> ClassicalDN:
    nx, nz = grid.nx, grid.nz
    h = 1.0 + eps * zeta
    if float(np.min(h)) < h_min:
        raise DepthVanishes(float(np.min(h)), h_min)
    Dx = fourier_diff_matrix(nx, grid.Lx)
    Dz = cheb_diff_matrix(nz)
    zeta_x = Dx @ zeta
    one_plus_z = 1.0 + 0.5 * (np.cos(np.pi * np.arange(nz) / (nz - 1)) - 1.0)

    DX = sp.kron(sp.csr_matrix(Dx), sp.identity(nz), format="csr")
    DZ = sp.kron(sp.identity(nx), sp.csr_matrix(Dz), format="csr")
    hv = np.repeat(h, nz)
    sx = eps * np.outer(zeta_x, one_plus_z).ravel()
    H = sp.diags(hv)
    Hinv = sp.diags(1.0 / hv)
    SX = sp.diags(sx)
    DXs = (DX - SX @ Hinv @ DZ).tocsr()
    DZs = (Hinv @ DZ).tocsr()
    L = (mu * (DX @ H @ DXs - DZ @ SX @ DXs) + DZ @ DZs).toarray()

    top = np.arange(nx) * nz
    bottom = top + nz - 1
    L[top] = 0.0
    L[top, top] = 1.0
    L[bottom] = DZs[bottom].toarray()
    return ClassicalDN(grid=grid, eps=eps, mu=mu, zeta_x=zeta_x,
                       lu=la.lu_factor(L), ops=(DXs, DZs))


def classical_dn(zeta: np.ndarray, psi: np.ndarray, params: Params) -> np.ndarray:
    """平均を残したままの G[ζ]ψ"""
    grid = grid_for(params)
    return build_classical_dn(zeta, params.eps, params.mu, grid, params.h_min).apply(psi)


def zcs_rhs(zeta: np.ndarray, psi: np.ndarray, params: Params) -> Tuple[np.ndarray, np.ndarray]:
    """∂tζ = G, ∂tψ = −ζ − (ε/2)ψx² + (εμ/2)(G + εζxψx)²/(1 + ε²μζx²)"""
    grid = grid_for(params)
    eps, mu = params.eps, params.mu
    Dx = fourier_diff_matrix(grid.nx, grid.Lx)
    G = classical_dn(zeta, psi, params)
    zx = Dx @ zeta
    px = Dx @ psi
    dpsi = -zeta - 0.5 * eps * px ** 2 + 0.5 * eps * mu * (G + eps * zx * px) ** 2 / (1.0 + eps ** 2 * mu * zx ** 2)
    dpsi = dpsi - np.mean(dpsi)
    return (spectral.dealias_filter(G - np.mean(G), grid, params.filter),
            spectral.dealias_filter(dpsi, grid, params.filter))


def zcs_step(zeta: np.ndarray, psi: np.ndarray, params: Params, dt: float) -> Tuple[np.ndarray, np.ndarray]:
    zeta1, psi1 = rk4_step((zeta, psi), dt, lambda u: zcs_rhs(u[0], u[1], params))
    return zeta1, psi1 - np.mean(psi1)


__all__ = [
    "fourier_diff_matrix",
    "cheb_diff_matrix",
    "ClassicalDN",
    "build_classical_dn",
    "classical_dn",
    "zcs_rhs",
    "zcs_step",
]
