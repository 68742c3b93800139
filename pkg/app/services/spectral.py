"""周期 x × 鉛直 Chebyshev 帯状領域の離散関数空間と線形作用素。

場は numpy 配列で表す:
  SurfaceField       -> shape (nx,)
  VolumeField        -> shape (nx, nz)   列 j=0 が水面 z=0, j=nz-1 が底面 z=-1
  VectorVolumeField  -> shape (3, nx, nz)
x 方向の変換は常に axis=0 に対して行う。
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Literal, Tuple

import numpy as np
from numpy.polynomial import chebyshev as cheb
from scipy import fft

from app.errors import MeanNotZero, NonFiniteSymbol
from app.models import FilterSpec

logger = logging.getLogger(__name__)

Symbol = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Grid:
    """周期 x 格子と Chebyshev-Gauss-Lobatto 鉛直格子、および各種の作用素表。"""

    nx: int
    nz: int
    Lx: float = 2.0 * np.pi

    def __post_init__(self) -> None:
        if self.nx < 8 or self.nx % 2 != 0:
            raise ValueError("nx は 8 以上の偶数である必要があります")
        if self.nz < 5:
            raise ValueError("nz は 5 以上である必要があります")
        if not self.Lx > 0.0:
            raise ValueError("Lx は正である必要があります")

        dx = self.Lx / self.nx
        object.__setattr__(self, "dx", dx)
        object.__setattr__(self, "x", np.arange(self.nx) * dx)
        k = 2.0 * np.pi * fft.rfftfreq(self.nx, d=dx)
        object.__setattr__(self, "k", k)
        # 奇数階微分では Nyquist モードを落とす
        kd = k.copy()
        kd[-1] = 0.0
        object.__setattr__(self, "kd", kd)
        object.__setattr__(self, "k0", 2.0 * np.pi / self.Lx)
        object.__setattr__(self, "kmax", float(k[-1]))

        n = self.nz - 1
        t = np.cos(np.pi * np.arange(self.nz) / n)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "z", 0.5 * (t - 1.0))

        vinv = np.linalg.inv(cheb.chebvander(t, n))
        object.__setattr__(self, "vinv", vinv)
        # d/dz = 2 d/dt
        dz = cheb.chebvander(t, n - 1) @ cheb.chebder(vinv, scl=2.0, axis=0)
        object.__setattr__(self, "Dz", dz)
        object.__setattr__(self, "Dzz", dz @ dz)
        # (Iz f)_i = ∫_{-1}^{z_i} f dz
        iz = cheb.chebvander(t, n + 1) @ cheb.chebint(vinv, lbnd=-1.0, scl=0.5, axis=0)
        object.__setattr__(self, "Iz", iz)
        # Clenshaw-Curtis 重み（∫_{-1}^{0}）
        object.__setattr__(self, "wz", iz[0].copy())
        object.__setattr__(self, "dz_min", float(np.min(np.abs(np.diff(self.z)))))

    def surface_zeros(self) -> np.ndarray:
        return np.zeros(self.nx)

    def volume_zeros(self) -> np.ndarray:
        return np.zeros((self.nx, self.nz))

    def vector_zeros(self) -> np.ndarray:
        return np.zeros((3, self.nx, self.nz))

    def mesh(self) -> Tuple[np.ndarray, np.ndarray]:
        """(X, Z) を shape (nx, nz) で返す"""
        return np.meshgrid(self.x, self.z, indexing="ij")


# ---------------------------------------------------------------------------
# 変換と基本量
# ---------------------------------------------------------------------------

def to_spectral(f: np.ndarray) -> np.ndarray:
    return fft.rfft(f, axis=-1 if f.ndim == 1 else 0)


def to_physical(fh: np.ndarray, grid: Grid) -> np.ndarray:
    return fft.irfft(fh, n=grid.nx, axis=-1 if fh.ndim == 1 else 0)


def _expand(factor: np.ndarray, fh: np.ndarray) -> np.ndarray:
    """モード方向の係数を fh の形に合わせて放送する"""
    return factor.reshape((-1,) + (1,) * (fh.ndim - 1))


def mean(f: np.ndarray):
    """ゼロモード（x 平均）。体積場なら各 z の平均を返す"""
    return np.mean(f, axis=0)


def field_scale(f: np.ndarray) -> float:
    s = float(np.max(np.abs(f))) if f.size else 0.0
    return s if s > 0.0 else 1.0


def ensure_mean_zero(f: np.ndarray, tol_mean: float, what: str = "field", scale: float | None = None) -> None:
    """平均が tol_mean × scale を超えたら MeanNotZero"""
    m = float(np.max(np.abs(np.atleast_1d(mean(f)))))
    ref = scale if scale is not None else field_scale(f)
    if m > tol_mean * ref:
        raise MeanNotZero(m, tol_mean * ref, what)


def remove_mean(f: np.ndarray) -> np.ndarray:
    return f - mean(f)


def apply_multiplier(
    f: np.ndarray,
    symbol: Symbol,
    grid: Grid,
    *,
    singular: bool = False,
    odd: bool = False,
    tol_mean: float = 1e-12,
) -> np.ndarray:
    """Fourier 乗数 symbol(k) を掛ける。

    symbol は非負の波数配列を受け取る。odd=True は k について奇関数の
    シンボル（ik など）で、Nyquist モードを 0 にする。singular=True は
    k=0 で特異なシンボルで、入力の平均が許容値以下であることを要求し、
    出力の平均を 0 とする。
    """
    fh = to_spectral(f)
    k = grid.k
    values = np.zeros(k.shape, dtype=complex)
    if singular:
        ensure_mean_zero(f, tol_mean, "multiplier input")
        values[1:] = symbol(k[1:])
    else:
        values[:] = symbol(k)
    bad = ~np.isfinite(values)
    if np.any(bad):
        raise NonFiniteSymbol(int(np.count_nonzero(bad)))
    if odd:
        values[-1] = 0.0
    out = to_physical(fh * _expand(values, fh), grid)
    return out


def dx(f: np.ndarray, grid: Grid, order: int = 1) -> np.ndarray:
    """スペクトル x 微分（axis=0）"""
    fh = to_spectral(f)
    kk = grid.kd if order % 2 == 1 else grid.k
    return to_physical(fh * _expand((1j * kk) ** order, fh), grid)


def inverse_dx(f: np.ndarray, grid: Grid) -> np.ndarray:
    """∂x⁻¹。ゼロモードは捨てる（出力は平均ゼロ）"""
    fh = to_spectral(f)
    inv = np.zeros(grid.k.shape, dtype=complex)
    inv[1:-1] = 1.0 / (1j * grid.k[1:-1])
    return to_physical(fh * _expand(inv, fh), grid)


def inverse_laplacian(f: np.ndarray, grid: Grid) -> np.ndarray:
    """∂x⁻²。ゼロモードは捨てる"""
    fh = to_spectral(f)
    inv = np.zeros(grid.k.shape)
    inv[1:] = -1.0 / grid.k[1:] ** 2
    return to_physical(fh * _expand(inv, fh), grid)


def frame_multiplier(mu: float) -> Symbol:
    """𝔓 = |k| / (1+√μ|k|)^{1/2}"""
    smu = np.sqrt(mu)
    return lambda k: np.abs(k) / np.sqrt(1.0 + smu * np.abs(k))


def dn_symbol(mu: float) -> Symbol:
    """平坦帯の Dirichlet-Neumann シンボル |k| tanh(√μ|k|) / √μ"""
    smu = np.sqrt(mu)
    return lambda k: np.abs(k) * np.tanh(smu * np.abs(k)) / smu


def dispersion_frequency(k: float, mu: float) -> float:
    """ω_k = (|k| tanh(√μ|k|) / √μ)^{1/2}"""
    return float(np.sqrt(dn_symbol(mu)(np.asarray(float(k)))))


# ---------------------------------------------------------------------------
# Hodge 分解・調和拡張・フィルタ
# ---------------------------------------------------------------------------

def hodge_project(fx: np.ndarray, fy: np.ndarray):
    """d=1 の Hodge 分解。(勾配部分, 直交部分, 平均) を返す。

    ∂y = 0 なので Π は x 成分の平均除去、Π⊥ は y 成分の平均除去になる。
    """
    if not (np.all(np.isfinite(fx)) and np.all(np.isfinite(fy))):
        raise ValueError("hodge_project の入力に非有限値が含まれています")
    mx, my = float(mean(fx)), float(mean(fy))
    gradient_part = (fx - mx, np.zeros_like(fy))
    orthogonal_part = (np.zeros_like(fx), fy - my)
    return gradient_part, orthogonal_part, (mx, my)


def harmonic_extension(
    v: np.ndarray,
    kind: Literal["cosh_neumann_bottom", "sinh_zero_bottom"],
    mu: float,
    grid: Grid,
    tol_mean: float = 1e-12,
) -> np.ndarray:
    """水面値 v の鉛直調和拡張を各 Chebyshev 点で評価する"""
    if mu <= 0.0:
        raise ValueError("mu は正である必要があります")
    vh = to_spectral(v)
    a = np.sqrt(mu) * grid.k[:, None]
    z = grid.z[None, :]
    if kind == "cosh_neumann_bottom":
        factor = (np.exp(a * z) + np.exp(-a * (z + 2.0))) / (1.0 + np.exp(-2.0 * a))
    elif kind == "sinh_zero_bottom":
        ensure_mean_zero(v, tol_mean, "sinh extension input")
        factor = np.zeros((grid.k.size, grid.nz))
        a1 = a[1:]
        factor[1:] = (np.exp(a1 * z) - np.exp(-a1 * (z + 2.0))) / (1.0 - np.exp(-2.0 * a1))
    else:
        raise ValueError(f"未知の拡張種別です: {kind}")
    return to_physical(vh[:, None] * factor, grid)


def filter_factor(grid: Grid, spec: FilterSpec) -> np.ndarray:
    """各 rfft モードのフィルタ係数"""
    j = np.arange(grid.k.size)
    factor = np.exp(-spec.alpha * (grid.k / grid.kmax) ** spec.order)
    if spec.two_thirds:
        factor = np.where(j > grid.nx // 3, 0.0, factor)
    return factor


def dealias_filter(f: np.ndarray, grid: Grid, spec: FilterSpec | None = None) -> np.ndarray:
    """2/3 則と指数フィルタを x 方向に適用する"""
    spec = spec or FilterSpec()
    fh = to_spectral(f)
    return to_physical(fh * _expand(filter_factor(grid, spec), fh), grid)


# ---------------------------------------------------------------------------
# ノルム・内積
# ---------------------------------------------------------------------------

def surface_inner(f: np.ndarray, g: np.ndarray, grid: Grid) -> float:
    """台形則（三角多項式に対して厳密）による ∫ f g dx"""
    return float(np.sum(f * g) * grid.dx)


def l2_norm(f: np.ndarray, grid: Grid) -> float:
    return float(np.sqrt(surface_inner(f, f, grid)))


def _mode_weights(grid: Grid) -> np.ndarray:
    """rfft 片側表現で各モードが何回数えられるか"""
    w = np.full(grid.k.size, 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    return w


def spectral_l2_norm(f: np.ndarray, grid: Grid) -> float:
    """Parseval によるスペクトル側の L² ノルム"""
    fh = to_spectral(f) / grid.nx
    return float(np.sqrt(grid.Lx * np.sum(_mode_weights(grid) * np.abs(fh) ** 2)))


def weighted_norm_sq(f: np.ndarray, weight: np.ndarray, grid: Grid) -> float:
    """Lx Σ_k w(k) |f̂_k|²。weight は rfft 波数上の非負値"""
    fh = to_spectral(f) / grid.nx
    return float(grid.Lx * np.sum(_mode_weights(grid) * weight * np.abs(fh) ** 2))


def sobolev_norm_sq(f: np.ndarray, order: int, grid: Grid, symbol: Symbol | None = None) -> float:
    """整数次 Sobolev ノルムの二乗 Σ_{m≤order} |∂^m (M f)|₂²"""
    k = grid.k
    weight = np.zeros_like(k)
    for m in range(order + 1):
        weight = weight + k ** (2 * m)
    if symbol is not None:
        weight = weight * np.abs(symbol(k)) ** 2
    return weighted_norm_sq(f, weight, grid)


def volume_sobolev_norm_sq(F: np.ndarray, order: int, grid: Grid) -> float:
    """Σ_{m+l≤order} ‖∂x^m ∂z^l F‖²（平坦帯上の整数次ノルム）"""
    total = 0.0
    Fl = np.asarray(F, dtype=float)
    k = grid.k
    for l in range(order + 1):
        weight = np.zeros_like(k)
        for m in range(order - l + 1):
            weight = weight + k ** (2 * m)
        Fh = to_spectral(Fl) / grid.nx
        column = grid.Lx * np.sum(_mode_weights(grid)[:, None] * weight[:, None] * np.abs(Fh) ** 2, axis=0)
        total += float(column @ grid.wz)
        Fl = dz(Fl, grid)
    return total


def h0_minus_half_norm_sq(f: np.ndarray, mu: float, grid: Grid, tol_mean: float = 1e-12) -> float:
    """|f|²_{H0^{-1/2}} = |(1+√μ|D|)^{1/2}/|D| f|₂²（平均ゼロを要求）"""
    ensure_mean_zero(f, tol_mean, "H0^{-1/2} input")
    k = grid.k
    weight = np.zeros_like(k)
    weight[1:] = (1.0 + np.sqrt(mu) * k[1:]) / k[1:] ** 2
    return weighted_norm_sq(f, weight, grid)


# ---------------------------------------------------------------------------
# 鉛直方向
# ---------------------------------------------------------------------------

def dz(F: np.ndarray, grid: Grid) -> np.ndarray:
    """Chebyshev 微分 ∂z（最後の軸）"""
    return F @ grid.Dz.T


def integrate_from_bottom(F: np.ndarray, grid: Grid) -> np.ndarray:
    """∫_{-1}^{z} F dz'"""
    return F @ grid.Iz.T


def integrate_from_surface(F: np.ndarray, grid: Grid) -> np.ndarray:
    """∫_{0}^{z} F dz'（z<0 では負の向き）"""
    G = integrate_from_bottom(F, grid)
    return G - G[..., :1]


def depth_integral(F: np.ndarray, grid: Grid) -> np.ndarray:
    """∫_{-1}^{0} F dz（Clenshaw-Curtis）"""
    return F @ grid.wz


def chebyshev_coefficients(F: np.ndarray, grid: Grid) -> np.ndarray:
    """鉛直方向の Chebyshev 係数（t 変数）"""
    return F @ grid.vinv.T


def evaluate_z(F: np.ndarray, znew: np.ndarray, grid: Grid) -> np.ndarray:
    """各 x 列の多項式補間を znew（shape (nx, m)）で評価する。区間外は外挿"""
    coef = chebyshev_coefficients(F, grid)
    tnew = 2.0 * znew + 1.0
    out = np.zeros_like(tnew, dtype=float)
    for i in range(F.shape[0]):
        out[i] = cheb.chebval(tnew[i], coef[i])
    return out


__all__ = [
    "Grid",
    "to_spectral",
    "to_physical",
    "mean",
    "ensure_mean_zero",
    "remove_mean",
    "apply_multiplier",
    "dx",
    "inverse_dx",
    "inverse_laplacian",
    "frame_multiplier",
    "dn_symbol",
    "dispersion_frequency",
    "hodge_project",
    "harmonic_extension",
    "filter_factor",
    "dealias_filter",
    "surface_inner",
    "l2_norm",
    "spectral_l2_norm",
    "weighted_norm_sq",
    "sobolev_norm_sq",
    "volume_sobolev_norm_sq",
    "h0_minus_half_norm_sq",
    "dz",
    "integrate_from_bottom",
    "integrate_from_surface",
    "depth_integral",
    "chebyshev_coefficients",
    "evaluate_z",
]
