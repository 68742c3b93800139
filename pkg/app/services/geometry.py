"""平坦帯 𝕋×[-1,0] を流体領域へ写す直線化 σ = ε(1+z)ζ と σ 微分。

ベクトル場は (3, nx, nz) の配列で、速度なら (V_x, V_y, w)、
渦度なら (ω₁, ω₂, ω₃) を保持する。μ スケールの U^μ = (√μV, w) は
作用素の内部でのみ組み立てる。
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Literal, Optional, Tuple

import numpy as np

from app.errors import DepthVanishes
from app.services import spectral
from app.services.spectral import Grid

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GeometryCache:
    grid: Grid
    zeta: np.ndarray
    eps: float
    mu: float
    h: np.ndarray
    zeta_x: np.ndarray
    sigma: np.ndarray
    sigma_x: np.ndarray
    sigma_z: np.ndarray
    htilde: np.ndarray
    normal: np.ndarray
    pseudo_normal: np.ndarray

    @property
    def sqrt_mu(self) -> float:
        return float(np.sqrt(self.mu))

    @property
    def min_h(self) -> float:
        return float(np.min(self.h))


def build_geometry(zeta: np.ndarray, eps: float, mu: float, grid: Grid, h_min: float = 0.05) -> GeometryCache:
    """ζ から直線化の係数をまとめて計算する"""
    zeta = np.asarray(zeta, dtype=float)
    if zeta.shape != (grid.nx,):
        raise ValueError(f"ζ の形状が格子と一致しません: {zeta.shape}")
    if eps <= 0.0 or mu <= 0.0:
        raise ValueError("eps と mu は正である必要があります")
    h = 1.0 + eps * zeta
    if float(np.min(h)) < h_min:
        raise DepthVanishes(float(np.min(h)), h_min)

    zeta_x = spectral.dx(zeta, grid)
    one_plus_z = 1.0 + grid.z[None, :]
    sigma = eps * one_plus_z * zeta[:, None]
    sigma_x = eps * one_plus_z * zeta_x[:, None]
    sigma_z = np.repeat((eps * zeta)[:, None], grid.nz, axis=1)
    htilde = 1.0 + sigma_z
    smu = np.sqrt(mu)
    normal = np.stack([-eps * smu * zeta_x, np.zeros(grid.nx), np.ones(grid.nx)])
    pseudo_normal = np.stack([-smu * sigma_x, np.zeros_like(sigma), np.ones_like(sigma)])
    return GeometryCache(
        grid=grid, zeta=zeta, eps=float(eps), mu=float(mu), h=h, zeta_x=zeta_x,
        sigma=sigma, sigma_x=sigma_x, sigma_z=sigma_z, htilde=htilde,
        normal=normal, pseudo_normal=pseudo_normal,
    )


# ---------------------------------------------------------------------------
# σ 微分
# ---------------------------------------------------------------------------

def sigma_dx(F: np.ndarray, G: GeometryCache) -> np.ndarray:
    """∂x^σ F = ∂x F − (∂xσ / (1+∂zσ)) ∂z F"""
    return spectral.dx(F, G.grid) - (G.sigma_x / G.htilde) * spectral.dz(F, G.grid)


def sigma_dz(F: np.ndarray, G: GeometryCache) -> np.ndarray:
    """∂z^σ F = ∂z F / (1+∂zσ)"""
    return spectral.dz(F, G.grid) / G.htilde


def sigma_derivative(
    F: np.ndarray,
    axis: Literal["x", "z", "t"],
    G: GeometryCache,
    *,
    dt_F: Optional[np.ndarray] = None,
    dt_sigma: Optional[np.ndarray] = None,
) -> np.ndarray:
    """連鎖律による σ 微分。t 方向は呼び出し側が ∂tF と ∂tσ を与える"""
    if axis == "x":
        return sigma_dx(F, G)
    if axis == "z":
        return sigma_dz(F, G)
    if axis == "t":
        if dt_F is None or dt_sigma is None:
            raise ValueError("t 方向の σ 微分には dt_F と dt_sigma が必要です")
        return dt_F - (dt_sigma / G.htilde) * spectral.dz(F, G.grid)
    raise ValueError(f"未知の方向です: {axis}")


def scaled_grad(F: np.ndarray, G: GeometryCache) -> np.ndarray:
    """∇^{σ,μ} F = (√μ ∂x^σ F, 0, ∂z^σ F)"""
    return np.stack([G.sqrt_mu * sigma_dx(F, G), np.zeros_like(F), sigma_dz(F, G)])


def scaled_div(A: np.ndarray, G: GeometryCache) -> np.ndarray:
    """∇^{σ,μ}·A = √μ ∂x^σ A₁ + ∂z^σ A₃。

    保存形 (1+∂zσ)∇^{σ,μ}·A = √μ(∂x(h̃A₁) − ∂z(∂xσ A₁)) + ∂zA₃ で評価する。
    離散的にも div∘curl = 0 が丸め誤差で成り立つ。
    """
    grid = G.grid
    flux = G.sqrt_mu * (spectral.dx(G.htilde * A[0], grid) - spectral.dz(G.sigma_x * A[0], grid))
    return (flux + spectral.dz(A[2], grid)) / G.htilde


def scaled_curl(A: np.ndarray, G: GeometryCache) -> np.ndarray:
    """∇^{σ,μ}×A = (−∂z^σA₂, ∂z^σA₁ − √μ∂x^σA₃, √μ∂x^σA₂)"""
    smu = G.sqrt_mu
    return np.stack([
        -sigma_dz(A[1], G),
        sigma_dz(A[0], G) - smu * sigma_dx(A[2], G),
        smu * sigma_dx(A[1], G),
    ])


def to_mu_convention(U: np.ndarray, mu: float) -> np.ndarray:
    """(V_x, V_y, w) -> U^μ = (√μV_x, √μV_y, w)"""
    smu = np.sqrt(mu)
    return np.stack([smu * U[0], smu * U[1], U[2]])


def from_mu_convention(Umu: np.ndarray, mu: float) -> np.ndarray:
    smu = np.sqrt(mu)
    return np.stack([Umu[0] / smu, Umu[1] / smu, Umu[2]])


def vorticity_of(U: np.ndarray, G: GeometryCache) -> np.ndarray:
    """速度 (V, w) から ω = curl^{σ,μ} U^μ / μ"""
    return scaled_curl(to_mu_convention(U, G.mu), G) / G.mu


# ---------------------------------------------------------------------------
# トレースと法線
# ---------------------------------------------------------------------------

def trace(F: np.ndarray, where: Literal["surface", "bottom"]) -> np.ndarray:
    if where == "surface":
        return F[..., 0].copy()
    if where == "bottom":
        return F[..., -1].copy()
    raise ValueError(f"未知のトレース位置です: {where}")


def surface_normal_component(A: np.ndarray, G: GeometryCache) -> np.ndarray:
    """A̲·N^μ = −ε√μ ∂xζ A̲₁ + A̲₃"""
    As = trace(A, "surface")
    return G.normal[0] * As[0] + As[2]


def bottom_normal_component(A: np.ndarray) -> np.ndarray:
    """A_b·N_b（N_b = e_z）"""
    return trace(A[2], "bottom")


def tangential_trace(U: np.ndarray, G: GeometryCache) -> Tuple[np.ndarray, np.ndarray]:
    """U∥ = (V̲_x + ε w̲ ∂xζ, V̲_y)"""
    Us = trace(U, "surface")
    return Us[0] + G.eps * Us[2] * G.zeta_x, Us[1]


def good_unknown(
    psi: np.ndarray, zeta: np.ndarray, w_surface: np.ndarray, alpha: int, eps: float, grid: Grid,
) -> np.ndarray:
    """ψ₍α₎ = ∂x^α ψ − ε w̲ ∂x^α ζ"""
    if alpha < 1:
        raise ValueError("alpha は 1 以上である必要があります")
    return spectral.dx(psi, grid, alpha) - eps * w_surface * spectral.dx(zeta, grid, alpha)


# ---------------------------------------------------------------------------
# 求積
# ---------------------------------------------------------------------------

def volume_integral(F: np.ndarray, G: GeometryCache) -> float:
    """∫∫ F (1+∂zσ) dz dx（x 台形則 × z Clenshaw-Curtis）"""
    return float(np.sum(spectral.depth_integral(F * G.htilde, G.grid)) * G.grid.dx)


def volume_inner(A: np.ndarray, B: np.ndarray, G: GeometryCache) -> float:
    """ベクトル場または体積場の重み付き内積"""
    prod = A * B
    if prod.ndim == 3:
        prod = np.sum(prod, axis=0)
    return volume_integral(prod, G)


__all__ = [
    "GeometryCache",
    "build_geometry",
    "sigma_dx",
    "sigma_dz",
    "sigma_derivative",
    "scaled_grad",
    "scaled_div",
    "scaled_curl",
    "to_mu_convention",
    "from_mu_convention",
    "vorticity_of",
    "trace",
    "surface_normal_component",
    "bottom_normal_component",
    "tangential_trace",
    "good_unknown",
    "volume_integral",
    "volume_inner",
]
