"""(ζ, ψ, ω) から発散ゼロの速度場を再構成する div-curl 問題。

d=1 では U^μ = ∇^{σ,μ}φ + curl^{σ,μ}(0, A₂, 0) + (0, √μV_y, 0) と分解する:
  φ   : Lφ = 0, φ|_{z=0} = ψ, 底面で ∂zφ = 0
  A₂  : L A₂ = −μ h̃ ω₂, A₂|_{z=-1} = 0, 水面で余法線微分 0
  V_y : ∂xψ̃ − √μ ∫_0^z h̃ ω₁ dz'
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np

from app.errors import BottomFluxNotZero, MeanNotZero, NotDivergenceFree
from app.models import Params, ResidualReport
from app.services import spectral
from app.services.elliptic import SigmaEllipticSolver
from app.services.geometry import (
    GeometryCache,
    build_geometry,
    scaled_div,
    scaled_grad,
    sigma_dx,
    sigma_dz,
    surface_normal_component,
    tangential_trace,
    trace,
    to_mu_convention,
    volume_inner,
    vorticity_of,
)
from app.services.spectral import Grid

logger = logging.getLogger(__name__)


@lru_cache(maxsize=32)
def make_grid(nx: int, nz: int, Lx: float) -> Grid:
    return Grid(nx=nx, nz=nz, Lx=Lx)


def grid_for(params: Params) -> Grid:
    return make_grid(params.nx, params.nz, params.Lx)


@dataclass
class DivCurlSolution:
    geometry: GeometryCache
    U: np.ndarray
    phi: np.ndarray
    U_rot: np.ndarray
    A2: np.ndarray
    psi_tilde: np.ndarray
    report: ResidualReport = field(default_factory=ResidualReport)

    @property
    def surface_velocity(self) -> np.ndarray:
        """(V̲_x, V̲_y, w̲)"""
        return trace(self.U, "surface")

    @property
    def bottom_velocity(self) -> np.ndarray:
        return trace(self.U, "bottom")

    @property
    def tangential(self) -> Tuple[np.ndarray, np.ndarray]:
        return tangential_trace(self.U, self.geometry)

    @property
    def U_mu(self) -> np.ndarray:
        return to_mu_convention(self.U, self.geometry.mu)

    def kinetic_energy(self) -> float:
        """(1/2μ) ∫∫ |U^μ|² h̃"""
        Umu = self.U_mu
        return volume_inner(Umu, Umu, self.geometry) / (2.0 * self.geometry.mu)


def _solver(G: GeometryCache, top: str, bottom: str, params: Params) -> SigmaEllipticSolver:
    return SigmaEllipticSolver(
        G, top, bottom,
        rtol=params.krylov_rtol, maxiter=params.krylov_maxiter, restart=params.krylov_restart,
    )


def divergence_residual(A: np.ndarray, G: GeometryCache) -> float:
    """max |∇^{σ,μ}·A| を場のスケールで割った値"""
    return float(np.max(np.abs(scaled_div(A, G)))) / spectral.field_scale(A)


def check_divergence_free(A: np.ndarray, G: GeometryCache, tol_div: float) -> None:
    res = divergence_residual(A, G)
    if res > tol_div:
        raise NotDivergenceFree(res, tol_div)


# ---------------------------------------------------------------------------
# 部分問題
# ---------------------------------------------------------------------------

def solve_tilde_psi(omega: np.ndarray, G: GeometryCache, tol_mean: float = 1e-12, strict: bool = True) -> np.ndarray:
    """∂x²ψ̃ = ω̲·N^μ を解く（ψ̃ は平均ゼロ）"""
    flux = surface_normal_component(omega, G)
    scale = spectral.field_scale(omega)
    m = float(spectral.mean(flux))
    if abs(m) > tol_mean * scale:
        if strict:
            raise MeanNotZero(m, tol_mean * scale, "surface vorticity flux")
        logger.debug("水面渦度フラックスの平均を除去します: mean=%.3e", m)
    return spectral.inverse_laplacian(flux - m, G.grid)


def solve_potential(psi: np.ndarray, G: GeometryCache, params: Params, x0: Optional[np.ndarray] = None):
    """Lφ = 0, φ(0) = ψ, 底面 Neumann。EllipticResult を返す"""
    grid = G.grid
    solver = _solver(G, "dirichlet", "neumann", params)
    return solver.solve(grid.volume_zeros(), psi, grid.surface_zeros(), x0=x0)


def solve_streamfunction(omega2: np.ndarray, G: GeometryCache, params: Params, x0: Optional[np.ndarray] = None):
    """L A₂ = −μh̃ω₂, 水面余法線 0, 底面 A₂ = 0"""
    grid = G.grid
    solver = _solver(G, "conormal", "dirichlet", params)
    return solver.solve(-G.mu * G.htilde * omega2, grid.surface_zeros(), grid.surface_zeros(), x0=x0)


def transverse_velocity(omega1: np.ndarray, psi_tilde: np.ndarray, G: GeometryCache) -> np.ndarray:
    """V_y = ∂xψ̃ − √μ ∫_0^z h̃ ω₁"""
    grid = G.grid
    return spectral.dx(psi_tilde, grid)[:, None] - G.sqrt_mu * spectral.integrate_from_surface(G.htilde * omega1, grid)


def solve_rotational(
    omega: np.ndarray,
    psi_tilde: np.ndarray,
    G: GeometryCache,
    params: Params,
    *,
    check_div: bool = True,
) -> Tuple[np.ndarray, np.ndarray, int]:
    """回転部分 U_rot = (V_x, V_y, w) と流れ関数 A₂、反復回数を返す"""
    if check_div:
        check_divergence_free(omega, G, params.tol_div)
    grid = G.grid
    U_rot = grid.vector_zeros()
    A2 = grid.volume_zeros()
    iterations = 0
    if np.any(omega[1]):
        res = solve_streamfunction(omega[1], G, params)
        A2 = res.u
        iterations = res.iterations
        U_rot[0] = -sigma_dz(A2, G) / G.sqrt_mu
        U_rot[2] = G.sqrt_mu * sigma_dx(A2, G)
    U_rot[1] = transverse_velocity(omega[0], psi_tilde, G)
    return U_rot, A2, iterations


# ---------------------------------------------------------------------------
# 再構成
# ---------------------------------------------------------------------------

def _residual_report(
    U: np.ndarray, omega: np.ndarray, psi: np.ndarray, psi_tilde: np.ndarray, G: GeometryCache, iterations: int,
) -> ResidualReport:
    grid = G.grid
    curl_res = vorticity_of(U, G) - omega
    Umu = to_mu_convention(U, G.mu)
    ux, uy = tangential_trace(U, G)
    flux = surface_normal_component(omega, G)
    omega3_b = trace(omega[2], "bottom")
    Vy_b = trace(U[1], "bottom")
    return ResidualReport(
        curl_max=float(np.max(np.abs(curl_res))),
        div_max=float(np.max(np.abs(scaled_div(Umu, G)))),
        bottom_w_max=float(np.max(np.abs(trace(U[2], "bottom")))),
        surface_x_defect=float(np.max(np.abs(ux - spectral.dx(psi, grid)))),
        surface_y_defect=float(np.max(np.abs(uy - spectral.dx(psi_tilde, grid)))),
        transverse_defect=float(np.max(np.abs(omega[2] - sigma_dx(U[1], G)))),
        surface_identity=float(np.max(np.abs(flux - spectral.dx(uy, grid)))),
        bottom_identity=float(np.max(np.abs(omega3_b - spectral.dx(Vy_b, grid)))),
        iterations=iterations,
    )


def reconstruct_velocity(
    zeta: np.ndarray,
    psi: np.ndarray,
    omega: np.ndarray,
    params: Params,
    *,
    geometry: Optional[GeometryCache] = None,
    strict: bool = True,
    check_div: bool = True,
) -> DivCurlSolution:
    """速度 (V_x, V_y, w) を再構成する。

    strict=False のときは水面渦度フラックスの平均を例外にせず除去する
    （時間積分の中間段で使う）。
    """
    grid = grid_for(params)
    G = geometry or build_geometry(zeta, params.eps, params.mu, grid, params.h_min)
    psi_tilde = solve_tilde_psi(omega, G, params.tol_mean, strict=strict)

    iterations = 0
    phi = grid.volume_zeros()
    if np.any(psi):
        res = solve_potential(psi, G, params)
        phi = res.u
        iterations += res.iterations
    U_pot = np.stack([sigma_dx(phi, G), np.zeros_like(phi), sigma_dz(phi, G)])

    U_rot, A2, it_rot = solve_rotational(omega, psi_tilde, G, params, check_div=check_div)
    iterations += it_rot
    U = U_pot + U_rot
    report = _residual_report(U, omega, psi, psi_tilde, G, iterations)
    logger.debug("reconstruct iterations=%d curl=%.2e div=%.2e", iterations, report.curl_max, report.div_max)
    return DivCurlSolution(geometry=G, U=U, phi=phi, U_rot=U_rot, A2=A2, psi_tilde=psi_tilde, report=report)


def generalized_dn_from(sol: DivCurlSolution) -> np.ndarray:
    """G = −ε∂xζ V̲_x + w̲/μ（平均は除去し、除去前の値を report に残す）"""
    G = sol.geometry
    Us = sol.surface_velocity
    raw = -G.eps * G.zeta_x * Us[0] + Us[2] / G.mu
    m = float(spectral.mean(raw))
    sol.report = sol.report.model_copy(update={"dn_mean": m})
    return raw - m


def generalized_DN(zeta: np.ndarray, psi: np.ndarray, omega: np.ndarray, params: Params) -> np.ndarray:
    return generalized_dn_from(reconstruct_velocity(zeta, psi, omega, params))


# ---------------------------------------------------------------------------
# curl の逆と発散ゼロ射影
# ---------------------------------------------------------------------------

def curl_inverse(C: np.ndarray, G: GeometryCache, params: Params) -> np.ndarray:
    """curl^{σ,μ} B = C, ∇^{σ,μ}·B = 0 となる B を返す。

    B₂ = −∫_{-1}^z h̃C₁、(B₁, B₃) = (−∂z^σχ, √μ∂x^σχ) で Lχ = −h̃C₂,
    χ|_{z=-1} = 0, 水面余法線 0。底面では B₂ = B₃ = 0 となる。
    """
    check_divergence_free(C, G, params.tol_div)
    scale = spectral.field_scale(C)
    flux_b = float(np.max(np.abs(trace(C[2], "bottom"))))
    if flux_b > params.tol_div * scale:
        raise BottomFluxNotZero(flux_b, params.tol_div * scale)
    grid = G.grid
    B = grid.vector_zeros()
    B[1] = -spectral.integrate_from_bottom(G.htilde * C[0], grid)
    if np.any(C[1]):
        solver = _solver(G, "conormal", "dirichlet", params)
        chi = solver.solve(-G.htilde * C[1], grid.surface_zeros(), grid.surface_zeros()).u
        B[0] = -sigma_dz(chi, G)
        B[2] = G.sqrt_mu * sigma_dx(chi, G)
    logger.debug("curl_inverse bottom tangential defect=%.3e", float(np.max(np.abs(B[0][:, -1]))))
    return B


def project_div_free(omega: np.ndarray, G: GeometryCache, params: Params) -> np.ndarray:
    """発散ゼロ空間への射影 π[ζ]ω。

    楕円型射影 ω − ∇^{σ,μ}q（Lq = h̃∇^{σ,μ}·ω, q(0) = 0, 底面 Neumann）の後、
    横断成分を χ = χ̲ − √μ∫_0^z h̃ω₁, ∂xχ̲ = ω̲·N^μ から組み直す。
    """
    grid = G.grid
    out = np.array(omega, dtype=float, copy=True)
    div = scaled_div(out, G)
    if np.any(div):
        solver = _solver(G, "dirichlet", "neumann", params)
        q = solver.solve(G.htilde * div, grid.surface_zeros(), grid.surface_zeros()).u
        out = out - scaled_grad(q, G)

    flux = surface_normal_component(out, G)
    chi = spectral.inverse_dx(flux - spectral.mean(flux), grid)[:, None] \
        - G.sqrt_mu * spectral.integrate_from_surface(G.htilde * out[0], grid)
    out[0] = -sigma_dz(chi, G) / G.sqrt_mu
    out[2] = sigma_dx(chi, G)
    return out


__all__ = [
    "DivCurlSolution",
    "make_grid",
    "grid_for",
    "divergence_residual",
    "check_divergence_free",
    "solve_tilde_psi",
    "solve_potential",
    "solve_streamfunction",
    "transverse_velocity",
    "solve_rotational",
    "reconstruct_velocity",
    "generalized_dn_from",
    "generalized_DN",
    "curl_inverse",
    "project_div_free",
]
