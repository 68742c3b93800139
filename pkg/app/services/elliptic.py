"""直線化した帯上の変数係数楕円型問題のコロケーション解法。

    L u = (1+∂zσ) ∇^{σ,μ}·∇^{σ,μ} u
        = μ(∂x(h̃ ∂x^σu) − ∂z(∂xσ ∂x^σu)) + ∂z ∂z^σu      (内部点)

水面行・底面行は境界条件で置き換える:
  水面: Dirichlet u = g か、余法線 ∇^{σ,μ}u·Ñ^μ = −μ ∂xσ ∂x^σu + ∂z^σu = g
  底面: Dirichlet u = g か、Neumann ∂z^σu = g

反復は GMRES。前処理は平均水深 h̄ の平坦帯の作用素を Fourier モードごとに
LU 分解したもので、左前処理した系 M⁻¹A u = M⁻¹b を解く。
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Literal, Optional, Tuple

import numpy as np
import scipy.linalg as la
import scipy.sparse.linalg as sp_la

from app.errors import KrylovNoConvergence
from app.services import spectral
from app.services.geometry import GeometryCache, sigma_dx, sigma_dz

logger = logging.getLogger(__name__)

TopBC = Literal["dirichlet", "conormal"]
BottomBC = Literal["dirichlet", "neumann"]


@dataclass(frozen=True)
class EllipticResult:
    u: np.ndarray
    iterations: int
    residual: float


class SigmaEllipticSolver:
    """一つの幾何と境界条件の組に対する解法。

    前処理の LU 分解は構築時に一度だけ行う。
    """

    def __init__(
        self,
        geometry: GeometryCache,
        top: TopBC,
        bottom: BottomBC,
        *,
        rtol: float = 1e-10,
        maxiter: int = 200,
        restart: int = 60,
    ):
        if top not in ("dirichlet", "conormal"):
            raise ValueError(f"未知の水面境界条件です: {top}")
        if bottom not in ("dirichlet", "neumann"):
            raise ValueError(f"未知の底面境界条件です: {bottom}")
        if top == "conormal" and bottom == "neumann":
            raise ValueError("余法線と Neumann の組は一意に解けません")
        self.G = geometry
        self.top = top
        self.bottom = bottom
        self.rtol = rtol
        self.maxiter = maxiter
        self.restart = restart
        self._factors = self._factorize_flat()

    # -- 作用素 ------------------------------------------------------------

    def apply(self, u: np.ndarray) -> np.ndarray:
        G = self.G
        grid = G.grid
        ux = sigma_dx(u, G)
        uz = sigma_dz(u, G)
        # 発散形 ∇·P(Σ)∇u
        out = G.mu * (spectral.dx(G.htilde * ux, grid) - spectral.dz(G.sigma_x * ux, grid)) \
            + spectral.dz(uz, grid)
        if self.top == "dirichlet":
            out[:, 0] = u[:, 0]
        else:
            out[:, 0] = (-G.mu * G.sigma_x * ux + uz)[:, 0]
        if self.bottom == "dirichlet":
            out[:, -1] = u[:, -1]
        else:
            out[:, -1] = uz[:, -1]
        return out

    def _factorize_flat(self) -> List[Tuple[np.ndarray, np.ndarray]]:
        grid = self.G.grid
        hbar = float(np.mean(self.G.h))
        eye = np.eye(grid.nz)
        factors = []
        # 一階微分の合成なので Nyquist モードの k² は 0 として扱う
        for kk in grid.kd:
            A = -hbar * self.G.mu * kk ** 2 * eye + grid.Dzz / hbar
            A[0] = eye[0] if self.top == "dirichlet" else grid.Dz[0] / hbar
            A[-1] = eye[-1] if self.bottom == "dirichlet" else grid.Dz[-1] / hbar
            factors.append(la.lu_factor(A, check_finite=False))
        return factors

    def precondition(self, r: np.ndarray) -> np.ndarray:
        grid = self.G.grid
        rh = spectral.to_spectral(r)
        uh = np.empty_like(rh)
        for j, lu_piv in enumerate(self._factors):
            re = la.lu_solve(lu_piv, rh[j].real, check_finite=False)
            im = la.lu_solve(lu_piv, rh[j].imag, check_finite=False)
            uh[j] = re + 1j * im
        return spectral.to_physical(uh, grid)

    # -- 求解 --------------------------------------------------------------

    def assemble_rhs(self, f: np.ndarray, g_top: np.ndarray, g_bottom: np.ndarray) -> np.ndarray:
        b = np.array(f, dtype=float, copy=True)
        b[:, 0] = g_top
        b[:, -1] = g_bottom
        return b

    def solve(
        self,
        f: np.ndarray,
        g_top: np.ndarray,
        g_bottom: np.ndarray,
        x0: Optional[np.ndarray] = None,
    ) -> EllipticResult:
        grid = self.G.grid
        shape = (grid.nx, grid.nz)
        b = self.assemble_rhs(f, g_top, g_bottom)
        pb = self.precondition(b).ravel()
        if not np.any(pb):
            return EllipticResult(u=np.zeros(shape), iterations=0, residual=0.0)

        def matvec(v: np.ndarray) -> np.ndarray:
            return self.precondition(self.apply(v.reshape(shape))).ravel()

        op = sp_la.LinearOperator((pb.size, pb.size), matvec=matvec, dtype=float)
        counter = {"n": 0}

        def callback(_):
            counter["n"] += 1

        guess = pb.copy() if x0 is None else np.asarray(x0, dtype=float).ravel()
        u, info = sp_la.gmres(
            op, pb, x0=guess, rtol=self.rtol, atol=0.0, restart=self.restart,
            maxiter=self.maxiter, callback=callback, callback_type="pr_norm",
        )
        residual = float(np.linalg.norm(matvec(u) - pb) / np.linalg.norm(pb))
        if info != 0 or not np.isfinite(residual):
            raise KrylovNoConvergence(counter["n"], residual)
        logger.debug("gmres top=%s bottom=%s iterations=%d residual=%.3e",
                     self.top, self.bottom, counter["n"], residual)
        return EllipticResult(u=u.reshape(shape), iterations=counter["n"], residual=residual)


def solve_sigma_elliptic(
    G: GeometryCache,
    f: np.ndarray,
    top: TopBC,
    g_top: np.ndarray,
    bottom: BottomBC,
    g_bottom: np.ndarray,
    *,
    rtol: float = 1e-10,
    maxiter: int = 200,
    restart: int = 60,
    x0: Optional[np.ndarray] = None,
) -> EllipticResult:
    solver = SigmaEllipticSolver(G, top, bottom, rtol=rtol, maxiter=maxiter, restart=restart)
    return solver.solve(f, g_top, g_bottom, x0=x0)


__all__ = ["EllipticResult", "SigmaEllipticSolver", "solve_sigma_elliptic"]
