"""全エネルギー H、その変分勾配、作用素 J と Poisson 括弧。

内積は水面で ∫·dx、帯で ∫∫·h̃ dz dx。
  H = ½∫ζ² + (1/2μ)∫∫|U^μ|² h̃
  δH/δψ = G,  δH/δω = curl⁻¹U^μ
  δH/δζ = ζ + (ε/2)|U∥|² − (ε/2μ)(1+ε²μζx²)w̲²
          + ε√μ ω̲₂(∂x⁻¹G − P_x/L_x) + ε√μ (P_y/L_x) ω̲₁
ここで P = ∫∫V h̃ は水平運動量。その x 成分の勾配は
  δP_x/δζ = ε(∂xψ − √μ h ω̲₂),  δP_x/δψ = −ε∂xζ,  δP_x/δω = (0, −√μ h(1+z), 0)

括弧に渡す勾配 (a, b, C) は余接条件 ∂xC̲₂/√μ = b（平均を除く）を満たす必要がある。
ω ≡ 0 では J が C を参照しないので条件は課さない。
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.errors import InadmissibleDirection, InadmissibleFunctional
from app.models import FdReport, Params
from app.services import spectral
from app.services.divcurl import (
    DivCurlSolution,
    curl_inverse,
    divergence_residual,
    generalized_dn_from,
    grid_for,
    project_div_free,
    reconstruct_velocity,
)
from app.services.dynamics import State, rhs
from app.services.geometry import (
    GeometryCache,
    build_geometry,
    scaled_curl,
    surface_normal_component,
    trace,
    volume_inner,
    volume_integral,
)

logger = logging.getLogger(__name__)

Gradient = Tuple[np.ndarray, np.ndarray, np.ndarray]


@dataclass(frozen=True)
class Functional:
    """評価写像と三つの変分勾配の組"""

    name: str
    evaluate: Callable[[State, Params], float]
    gradient: Callable[[State, Params], Gradient]


def _solution(s: State, params: Params) -> DivCurlSolution:
    return reconstruct_velocity(s.zeta, s.psi, s.omega, params)


# ---------------------------------------------------------------------------
# エネルギーと運動量
# ---------------------------------------------------------------------------

def energy_parts(s: State, params: Params, sol: Optional[DivCurlSolution] = None) -> Tuple[float, float]:
    """(E_pot, E_kin)"""
    grid = grid_for(params)
    sol = sol if sol is not None else _solution(s, params)
    return 0.5 * spectral.surface_inner(s.zeta, s.zeta, grid), sol.kinetic_energy()


def total_energy(s: State, params: Params) -> float:
    e_pot, e_kin = energy_parts(s, params)
    return e_pot + e_kin


def horizontal_momentum(sol: DivCurlSolution) -> Tuple[float, float]:
    """P = ∫∫V h̃"""
    G = sol.geometry
    return volume_integral(sol.U[0], G), volume_integral(sol.U[1], G)


def grad_total_energy(s: State, params: Params, sol: Optional[DivCurlSolution] = None) -> Gradient:
    grid = grid_for(params)
    sol = sol if sol is not None else _solution(s, params)
    G = sol.geometry
    eps, mu = params.eps, params.mu
    smu = np.sqrt(mu)

    dn = generalized_dn_from(sol)
    ux, uy = sol.tangential
    w_s = sol.surface_velocity[2]
    omega_s = trace(s.omega, "surface")
    Px, Py = horizontal_momentum(sol)
    d_zeta = (
        s.zeta
        + 0.5 * eps * (ux ** 2 + uy ** 2)
        - 0.5 * eps / mu * (1.0 + eps ** 2 * mu * G.zeta_x ** 2) * w_s ** 2
        + eps * smu * omega_s[1] * (spectral.inverse_dx(dn, grid) - Px / grid.Lx)
        + eps * smu * (Py / grid.Lx) * omega_s[0]
    )
    d_zeta = d_zeta - spectral.mean(d_zeta)
    if np.any(sol.U):
        d_omega = curl_inverse(sol.U_mu, G, params)
    else:
        d_omega = grid.vector_zeros()
    return d_zeta, dn, d_omega


def mass_functional() -> Functional:
    def evaluate(s: State, params: Params) -> float:
        return float(np.sum(s.zeta) * grid_for(params).dx)

    def gradient(s: State, params: Params) -> Gradient:
        grid = grid_for(params)
        return np.ones(grid.nx), grid.surface_zeros(), grid.vector_zeros()

    return Functional(name="mass", evaluate=evaluate, gradient=gradient)


def linear_observable(weight: np.ndarray, name: str = "linear") -> Functional:
    """∫ζφ"""
    weight = np.asarray(weight, dtype=float)

    def evaluate(s: State, params: Params) -> float:
        return spectral.surface_inner(s.zeta, weight, grid_for(params))

    def gradient(s: State, params: Params) -> Gradient:
        grid = grid_for(params)
        return weight.copy(), grid.surface_zeros(), grid.vector_zeros()

    return Functional(name=name, evaluate=evaluate, gradient=gradient)


def surface_linear_functional(f_zeta: np.ndarray, f_psi: np.ndarray, name: str = "surface_linear") -> Functional:
    """∫ζf₁ + ∫ψf₂"""
    f_zeta = np.asarray(f_zeta, dtype=float)
    f_psi = np.asarray(f_psi, dtype=float)

    def evaluate(s: State, params: Params) -> float:
        grid = grid_for(params)
        return spectral.surface_inner(s.zeta, f_zeta, grid) + spectral.surface_inner(s.psi, f_psi, grid)

    def gradient(s: State, params: Params) -> Gradient:
        return f_zeta.copy(), f_psi.copy(), grid_for(params).vector_zeros()

    return Functional(name=name, evaluate=evaluate, gradient=gradient)


def energy_functional() -> Functional:
    return Functional(name="H", evaluate=total_energy, gradient=lambda s, p: grad_total_energy(s, p))


def grad_momentum_x(s: State, params: Params) -> Gradient:
    grid = grid_for(params)
    G = build_geometry(s.zeta, params.eps, params.mu, grid, params.h_min)
    eps, smu = params.eps, np.sqrt(params.mu)
    omega2_s = trace(s.omega[1], "surface")
    d_zeta = eps * (spectral.dx(s.psi, grid) - smu * G.h * omega2_s)
    d_zeta = d_zeta - spectral.mean(d_zeta)
    d_psi = -eps * G.zeta_x
    d_omega = grid.vector_zeros()
    d_omega[1] = -smu * G.h[:, None] * (1.0 + grid.z[None, :])
    return d_zeta, d_psi, d_omega


def momentum_functional() -> Functional:
    """水平運動量の x 成分 P_x = ∫∫V_x h̃"""

    def evaluate(s: State, params: Params) -> float:
        return horizontal_momentum(_solution(s, params))[0]

    return Functional(name="momentum_x", evaluate=evaluate, gradient=grad_momentum_x)


# ---------------------------------------------------------------------------
# 作用素 J と括弧
# ---------------------------------------------------------------------------

def apply_J(s: State, params: Params, grad: Gradient, geometry: Optional[GeometryCache] = None) -> Gradient:
    """J(a, b, C) を (ζ̇, ψ̇, ω̇) として返す"""
    grid = grid_for(params)
    G = geometry or build_geometry(s.zeta, params.eps, params.mu, grid, params.h_min)
    a, b, C = grad
    eps, mu = params.eps, params.mu
    smu = np.sqrt(mu)
    omega = s.omega
    omega_s = trace(omega, "surface")

    zeta_dot = np.array(b, dtype=float, copy=True)
    psi_dot = -np.asarray(a, dtype=float)
    omega_dot = grid.vector_zeros()
    if np.any(omega):
        psi_dot = psi_dot + eps * smu * (
            omega_s[1] * spectral.inverse_dx(b, grid) + spectral.inverse_dx(omega_s[1] * b, grid))
        if np.any(C):
            c = scaled_curl(C, G)
            c_s = trace(c, "surface")
            flux = surface_normal_component(omega, G)
            c_normal = surface_normal_component(c, G)
            Px = volume_integral(c[0] / smu, G)
            Py = volume_integral(c[1] / smu, G)
            psi_dot = psi_dot + (
                eps * spectral.inverse_dx(flux * c_s[1] / smu, grid)
                - eps * smu * spectral.inverse_dx(omega_s[1] * c_normal / mu, grid)
                - eps * smu * (Px / grid.Lx) * omega_s[1]
                + eps * smu * (Py / grid.Lx) * omega_s[0]
            )
            omega_dot = omega_dot + (eps / mu) * scaled_curl(np.cross(c, omega, axis=0), G)
        one_plus_z = 1.0 + grid.z[None, :]
        omega_dot = omega_dot + eps * one_plus_z * b[:, None] * spectral.dz(omega, grid) / G.htilde
    psi_dot = psi_dot - spectral.mean(psi_dot)
    return zeta_dot, psi_dot, omega_dot


def pairing(x: Gradient, y: Gradient, G: GeometryCache) -> float:
    grid = G.grid
    return (spectral.surface_inner(x[0], y[0], grid)
            + spectral.surface_inner(x[1], y[1], grid)
            + volume_inner(x[2], y[2], G))


def cotangent_residual(grad: Gradient, s: State, params: Params) -> float:
    """max|∂xC̲₂/√μ − b|（平均を除く）を場のスケールで割った値。ω ≡ 0 では 0"""
    if not np.any(s.omega):
        return 0.0
    grid = grid_for(params)
    _, b, C = grad
    lhs = spectral.dx(trace(C[1], "surface"), grid) / np.sqrt(params.mu)
    res = (lhs - spectral.mean(lhs)) - (b - spectral.mean(b))
    scale = max(spectral.field_scale(lhs), spectral.field_scale(b))
    return float(np.max(np.abs(res))) / scale


def admissible_gradient(F: Functional, s: State, params: Params) -> Gradient:
    grad = F.gradient(s, params)
    res = cotangent_residual(grad, s, params)
    if res > params.tol_cotangent:
        raise InadmissibleFunctional(F.name, res, params.tol_cotangent)
    return grad


def _bracket_parts(F: Functional, H: Functional, s: State, params: Params):
    grid = grid_for(params)
    G = build_geometry(s.zeta, params.eps, params.mu, grid, params.h_min)
    gF = admissible_gradient(F, s, params)
    gH = admissible_gradient(H, s, params)
    return G, gF, gH, apply_J(s, params, gH, G), apply_J(s, params, gF, G)


def poisson_bracket(F: Functional, H: Functional, s: State, params: Params) -> float:
    """{F,G} = (∇F, J∇G)。両方の勾配が余接条件を満たさなければ InadmissibleFunctional"""
    G, gF, _, jH, _ = _bracket_parts(F, H, s, params)
    return pairing(gF, jH, G)


def bracket_scale(gF: Gradient, gH: Gradient, jF: Gradient, jH: Gradient, G: GeometryCache) -> float:
    """Cauchy–Schwarz による |(∇F, J∇G)| + |(∇G, J∇F)| の上界"""
    return (np.sqrt(pairing(gF, gF, G) * pairing(jH, jH, G))
            + np.sqrt(pairing(gH, gH, G) * pairing(jF, jF, G)))


def j_antisymmetry_defect(F: Functional, H: Functional, s: State, params: Params) -> float:
    """|{F,G} + {G,F}| を bracket_scale で割った値"""
    G, gF, gH, jH, jF = _bracket_parts(F, H, s, params)
    defect = abs(pairing(gF, jH, G) + pairing(gH, jF, G))
    scale = bracket_scale(gF, gH, jF, jH, G)
    return float(defect / scale) if scale > 0.0 else float(defect)


def rhs_matches_gradient(s: State, params: Params) -> Dict[str, float]:
    """動力学の右辺と J·∇H の各行の差（相対値）"""
    grid = grid_for(params)
    sol = _solution(s, params)
    gradH = grad_total_energy(s, params, sol)
    jz, jp, jw = apply_J(s, params, gradH, sol.geometry)
    dz, dp, dw = rhs(s, params, solution=sol)
    jz = spectral.dealias_filter(jz, grid, params.filter)
    jp = spectral.dealias_filter(jp, grid, params.filter)
    jw = np.stack([spectral.dealias_filter(jw[c], grid, params.filter) for c in range(3)])

    def rel(a: np.ndarray, b: np.ndarray) -> float:
        return float(np.max(np.abs(a - b))) / max(spectral.field_scale(b), 1e-300)

    return {
        "zeta_row": rel(jz, dz),
        "psi_row": rel(jp - spectral.mean(jp), dp - spectral.mean(dp)),
        "omega_row": rel(jw, dw) if np.any(s.omega) else 0.0,
    }


def cotangent_defect(s: State, params: Params) -> float:
    """∂x(δH/δω)̲₂/√μ − δH/δψ の最大値（平均を除く）"""
    grid = grid_for(params)
    sol = _solution(s, params)
    _, dn, B = grad_total_energy(s, params, sol)
    lhs = spectral.dx(trace(B[1], "surface"), grid) / np.sqrt(params.mu)
    return float(np.max(np.abs(lhs - spectral.mean(lhs) - dn)))


# ---------------------------------------------------------------------------
# 有限差分検査
# ---------------------------------------------------------------------------

def resample_vorticity(omega: np.ndarray, G_old: GeometryCache, G_new: GeometryCache) -> np.ndarray:
    """同じ Euler 場を新しい直線化座標で標本化し直す: 1+z = (1+z')h'/h"""
    grid = G_old.grid
    z_old = (1.0 + grid.z[None, :]) * (G_new.h / G_old.h)[:, None] - 1.0
    return np.stack([spectral.evaluate_z(omega[c], z_old, grid) for c in range(3)])


def _check_direction(s: State, direction: State, params: Params, G: GeometryCache) -> None:
    scale = max(spectral.field_scale(direction.zeta), spectral.field_scale(direction.psi))
    for name, f in (("δζ", direction.zeta), ("δψ", direction.psi)):
        m = abs(float(spectral.mean(f)))
        if m > params.tol_mean * scale * 1e3:
            raise InadmissibleDirection(f"{name} の平均が 0 ではありません: {m:.3e}")
    if np.any(direction.omega):
        res = divergence_residual(direction.omega, G)
        if res > params.tol_div:
            raise InadmissibleDirection(f"δω が発散ゼロではありません: {res:.3e}")
        flux_b = trace(direction.omega[2], "bottom")
        if abs(float(spectral.mean(flux_b))) > params.tol_mean * 1e3 * spectral.field_scale(direction.omega):
            raise InadmissibleDirection("δω の底面法線成分の平均が 0 ではありません")


def perturbed_state(s: State, direction: State, h: float, params: Params, G: GeometryCache) -> State:
    grid = G.grid
    zeta = s.zeta + h * direction.zeta
    psi = s.psi + h * direction.psi
    omega = s.omega
    if np.any(direction.zeta) and np.any(omega):
        G_new = build_geometry(zeta, params.eps, params.mu, grid, params.h_min)
        omega = resample_vorticity(omega, G, G_new)
        omega = omega + h * direction.omega
        if np.any(omega[0]) or np.any(omega[2]):
            omega = project_div_free(omega, G_new, params)
    else:
        omega = omega + h * direction.omega
    return State(t=s.t, zeta=zeta, psi=psi, omega=omega)


def fd_check(
    F: Functional,
    s: State,
    direction: State,
    h_list: Sequence[float],
    params: Params,
) -> FdReport:
    """中心差分 (F(s+hδ) − F(s−hδ))/2h と勾配の内積を比べる"""
    tight = params.model_copy(update={
        "krylov_rtol": min(params.krylov_rtol, 1e-12),
        "krylov_maxiter": max(params.krylov_maxiter, 400),
    })
    grid = grid_for(tight)
    G = build_geometry(s.zeta, tight.eps, tight.mu, grid, tight.h_min)
    _check_direction(s, direction, tight, G)
    grad = F.gradient(s, tight)
    predicted = pairing(grad, (direction.zeta, direction.psi, direction.omega), G)

    errors: List[float] = []
    for h in h_list:
        plus = F.evaluate(perturbed_state(s, direction, h, tight, G), tight)
        minus = F.evaluate(perturbed_state(s, direction, -h, tight, G), tight)
        fd = (plus - minus) / (2.0 * h)
        errors.append(abs(fd - predicted) / max(abs(predicted), 1e-300))
    slope = None
    positive = [(h, e) for h, e in zip(h_list, errors) if e > 0.0]
    if len(positive) >= 2:
        hs, es = zip(*positive)
        slope = float(np.polyfit(np.log(hs), np.log(es), 1)[0])
    logger.debug("fd_check %s errors=%s", F.name, errors)
    return FdReport(errors=errors, min_error=min(errors), slope=slope, predicted=predicted)


def hamiltonian_consistency(
    trajectory: Sequence[State], F: Functional, params: Params, H: Optional[Functional] = None,
) -> Dict[str, float]:
    """軌道上の中心差分 Ḟ と {F,H} の比較。

    relative は max(|{F,H}|, |F|, H(初期)) で割った不一致。F の大きさが 0 に近い
    保存量でも意味のある比になるよう、初期エネルギーを下限に使う。
    """
    if len(trajectory) < 3:
        raise ValueError("軌道には 3 状態以上が必要です")
    H = H or energy_functional()
    values = [F.evaluate(s, params) for s in trajectory]
    mismatch = 0.0
    scale = 0.0
    for i in range(1, len(trajectory) - 1):
        dt = trajectory[i + 1].t - trajectory[i - 1].t
        lhs = (values[i + 1] - values[i - 1]) / dt
        rhs_value = poisson_bracket(F, H, trajectory[i], params)
        mismatch = max(mismatch, abs(lhs - rhs_value))
        scale = max(scale, abs(rhs_value))
    norm = max(scale, max(abs(v) for v in values), abs(H.evaluate(trajectory[0], params)))
    relative = mismatch / norm if norm > 0.0 else mismatch
    return {"max_mismatch": mismatch, "scale": scale, "relative": relative}


__all__ = [
    "Functional",
    "energy_parts",
    "total_energy",
    "horizontal_momentum",
    "grad_total_energy",
    "mass_functional",
    "linear_observable",
    "surface_linear_functional",
    "energy_functional",
    "grad_momentum_x",
    "momentum_functional",
    "apply_J",
    "pairing",
    "cotangent_residual",
    "admissible_gradient",
    "bracket_scale",
    "poisson_bracket",
    "j_antisymmetry_defect",
    "rhs_matches_gradient",
    "cotangent_defect",
    "resample_vorticity",
    "perturbed_state",
    "fd_check",
    "hamiltonian_consistency",
]
