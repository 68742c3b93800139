"""渦度付き一般化 ZCS 系の時間発展。

未知数は (ζ, ψ, ω) で、ω は直線化した帯上の渦度。
  ∂tζ = G
  ∂tψ = −ζ − (ε/2)|U∥|² + (ε/2μ)(1+ε²μζx²)w̲² + ε∂x⁻¹(ω̲·N^μ V̲_y)
  ∂tω = −εV_x∂xω − (ε/μ)𝕒∂zω + (ε/μ)(√μω₁∂x^σ + ω₃∂z^σ)U^μ
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Dict, Optional, Tuple

import numpy as np

from app.errors import RayleighTaylorViolated
from app.models import EnergyReport, Params
from app.services import spectral
from app.services.divcurl import (
    DivCurlSolution,
    divergence_residual,
    generalized_dn_from,
    grid_for,
    project_div_free,
    reconstruct_velocity,
)
from app.services.geometry import (
    build_geometry,
    good_unknown,
    sigma_dx,
    sigma_dz,
    surface_normal_component,
    to_mu_convention,
    trace,
)
from app.services.timestepping import rk4_step, steps_for

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class State:
    t: float
    zeta: np.ndarray
    psi: np.ndarray
    omega: np.ndarray

    @classmethod
    def rest(cls, params: Params) -> "State":
        grid = grid_for(params)
        return cls(t=0.0, zeta=grid.surface_zeros(), psi=grid.surface_zeros(), omega=grid.vector_zeros())

    def fields(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.zeta, self.psi, self.omega


def _filter_vector(A: np.ndarray, params: Params) -> np.ndarray:
    grid = grid_for(params)
    return np.stack([spectral.dealias_filter(A[c], grid, params.filter) for c in range(3)])


def stage_solution(s: State, params: Params) -> DivCurlSolution:
    """時間積分の段で使う寛容な再構成"""
    return reconstruct_velocity(s.zeta, s.psi, s.omega, params, strict=False, check_div=False)


# ---------------------------------------------------------------------------
# 右辺
# ---------------------------------------------------------------------------

def raw_dn(sol: DivCurlSolution) -> np.ndarray:
    G = sol.geometry
    Us = sol.surface_velocity
    return -G.eps * G.zeta_x * Us[0] + Us[2] / G.mu


def vertical_advection_coeff(s: State, sol: DivCurlSolution, params: Params) -> np.ndarray:
    """𝕒 = (w − μV_x∂xσ − (1+z)μG) / (1+∂zσ)。水面と底面で 0 になる"""
    G = sol.geometry
    one_plus_z = 1.0 + G.grid.z[None, :]
    dn = raw_dn(sol)
    return (sol.U[2] - G.mu * sol.U[0] * G.sigma_x - one_plus_z * G.mu * dn[:, None]) / G.htilde


def advect_vorticity(s: State, sol: DivCurlSolution, params: Params) -> np.ndarray:
    """−εV_x∂xω − (ε/μ)𝕒∂zω + (ε/μ)(ω·∇^{σ,μ})U^μ"""
    G = sol.geometry
    grid = G.grid
    omega = s.omega
    if not np.any(omega):
        return grid.vector_zeros()
    eps, mu = params.eps, params.mu
    a = vertical_advection_coeff(s, sol, params)
    Umu = to_mu_convention(sol.U, mu)
    out = np.empty_like(omega)
    for c in range(3):
        transport = -eps * sol.U[0] * spectral.dx(omega[c], grid) - (eps / mu) * a * spectral.dz(omega[c], grid)
        stretching = (eps / mu) * (G.sqrt_mu * omega[0] * sigma_dx(Umu[c], G) + omega[2] * sigma_dz(Umu[c], G))
        out[c] = transport + stretching
    return _filter_vector(out, params)


def surface_tendencies(s: State, sol: DivCurlSolution, params: Params) -> Tuple[np.ndarray, np.ndarray]:
    grid = sol.geometry.grid
    G = sol.geometry
    eps, mu = params.eps, params.mu
    dzeta = generalized_dn_from(sol)
    ux, uy = sol.tangential
    Us = sol.surface_velocity
    flux = surface_normal_component(s.omega, G)
    dpsi = (
        -s.zeta
        - 0.5 * eps * (ux ** 2 + uy ** 2)
        + 0.5 * eps / mu * (1.0 + eps ** 2 * mu * G.zeta_x ** 2) * Us[2] ** 2
        + eps * spectral.inverse_dx(flux * Us[1], grid)
    )
    dpsi = dpsi - spectral.mean(dpsi)
    return (spectral.dealias_filter(dzeta, grid, params.filter),
            spectral.dealias_filter(dpsi, grid, params.filter))


def rhs(s: State, params: Params, *, solution: Optional[DivCurlSolution] = None):
    """(∂tζ, ∂tψ, ∂tω) を返す"""
    sol = solution if solution is not None else stage_solution(s, params)
    dzeta, dpsi = surface_tendencies(s, sol, params)
    domega = advect_vorticity(s, sol, params)
    return dzeta, dpsi, domega


# ---------------------------------------------------------------------------
# 安定性モニタと時間刻み
# ---------------------------------------------------------------------------

def rayleigh_taylor(sol: DivCurlSolution, sol_prev: DivCurlSolution, dt: float, eps: float) -> Tuple[np.ndarray, float]:
    """𝔞 = 1 + ε(∂t + εV̲_x∂x)w̲（∂t は後退差分）"""
    grid = sol.geometry.grid
    w_now = sol.surface_velocity[2]
    w_prev = sol_prev.surface_velocity[2]
    dwdt = (w_now - w_prev) / dt if dt > 0.0 else np.zeros_like(w_now)
    a = 1.0 + eps * (dwdt + eps * sol.surface_velocity[0] * spectral.dx(w_now, grid))
    return a, float(np.min(a))


def gravity_wave_speed(params: Params) -> float:
    """平坦帯の分散関係による位相速度の最大値 max_k ω_k/k"""
    grid = grid_for(params)
    k = grid.k[1:]
    return float(np.max(np.sqrt(spectral.dn_symbol(params.mu)(k)) / k))


def cfl_dt(s: State, sol: DivCurlSolution, params: Params) -> float:
    grid = grid_for(params)
    eps, mu = params.eps, params.mu
    bounds = [grid.dx / gravity_wave_speed(params)]
    vmax = float(np.max(np.abs(sol.U[0])))
    if vmax > 0.0:
        bounds.append(grid.dx / (eps * vmax))
    amax = float(np.max(np.abs(vertical_advection_coeff(s, sol, params))))
    if amax > 0.0:
        bounds.append(mu * grid.dz_min / (eps * amax))
    return params.cfl * min(bounds)


def step(s: State, params: Params, dt: float, *, step_index: int = 1) -> State:
    """RK4 一段。clean_every ごとに ω を発散ゼロへ射影する"""
    grid = grid_for(params)

    def f(u):
        zeta, psi, omega = u
        return rhs(State(t=s.t, zeta=zeta, psi=psi, omega=omega), params)

    zeta, psi, omega = rk4_step(s.fields(), dt, f)
    # DepthVanishes はここで検出される
    G = build_geometry(zeta, params.eps, params.mu, grid, params.h_min)
    if params.clean_every > 0 and step_index % params.clean_every == 0 and np.any(omega):
        omega = project_div_free(omega, G, params)
    psi = psi - spectral.mean(psi)
    return State(t=s.t + dt, zeta=zeta, psi=psi, omega=omega)


# ---------------------------------------------------------------------------
# エネルギー
# ---------------------------------------------------------------------------

def energy_norm(
    s: State, params: Params, *, solution: Optional[DivCurlSolution] = None, min_a: float = 1.0,
) -> EnergyReport:
    """ℰᴺ とその内訳。各項は ½ を含む"""
    grid = grid_for(params)
    sol = solution if solution is not None else reconstruct_velocity(s.zeta, s.psi, s.omega, params)
    N = params.n_energy
    frame = spectral.frame_multiplier(params.mu)
    w_s = sol.surface_velocity[2]

    zeta_term = 0.5 * spectral.sobolev_norm_sq(s.zeta, N, grid)
    psi_term = 0.5 * spectral.sobolev_norm_sq(s.psi, 3, grid, symbol=frame)
    good = 0.0
    weight = np.abs(frame(grid.k)) ** 2
    for alpha in range(1, N + 1):
        psi_a = good_unknown(s.psi, s.zeta, w_s, alpha, params.eps, grid)
        good += spectral.weighted_norm_sq(psi_a, weight, grid)
    good_term = 0.5 * good
    vort_term = 0.5 * sum(spectral.volume_sobolev_norm_sq(s.omega[c], N - 1, grid) for c in range(3))
    flux_b = trace(s.omega[2], "bottom")
    bottom_term = 0.5 * spectral.h0_minus_half_norm_sq(flux_b, params.mu, grid, params.tol_mean)

    e_pot = 0.5 * spectral.surface_inner(s.zeta, s.zeta, grid)
    e_kin = sol.kinetic_energy()
    total = zeta_term + psi_term + good_term + vort_term + bottom_term
    return EnergyReport(
        total=total, zeta_term=zeta_term, psi_term=psi_term, good_unknown_term=good_term,
        vorticity_term=vort_term, bottom_term=bottom_term, hamiltonian=e_pot + e_kin,
        min_a=min_a, min_h=sol.geometry.min_h,
    )


# ---------------------------------------------------------------------------
# 時間積分ループ
# ---------------------------------------------------------------------------

class Simulation:
    """一つの初期状態から T まで積分し、各ステップの診断量を保持する"""

    def __init__(self, state: State, params: Params, dt: Optional[float] = None):
        self.params = params
        grid = grid_for(params)
        G = build_geometry(state.zeta, params.eps, params.mu, grid, params.h_min)
        omega = project_div_free(state.omega, G, params) if np.any(state.omega) else state.omega
        self.state = replace(state, psi=state.psi - spectral.mean(state.psi), omega=omega)
        self.solution = reconstruct_velocity(self.state.zeta, self.state.psi, self.state.omega, params, geometry=G)
        self.cfl_bound = cfl_dt(self.state, self.solution, params)
        # 刻み幅を与えなければ毎ステップ CFL を評価し直す
        self.adaptive = dt is None and params.dt is None
        if dt is not None:
            self.dt_max = dt
        elif params.dt is not None:
            self.dt_max = params.dt
        else:
            self.dt_max = self.cfl_bound
        self.last_dt = 0.0
        self._cfl_warned = False
        self.steps_done = 0
        self.min_a = 1.0
        self.bottom_flux_residual = 0.0

    def advance(self, dt: float) -> State:
        p = self.params
        prev_state, prev_sol = self.state, self.solution
        new = step(prev_state, p, dt, step_index=self.steps_done + 1)
        sol = reconstruct_velocity(new.zeta, new.psi, new.omega, p, strict=False, check_div=p.clean_every > 0)
        _, min_a = rayleigh_taylor(sol, prev_sol, dt, p.eps)
        self.bottom_flux_residual = self._bottom_flux_transport(prev_state, prev_sol, new, sol, dt)
        self.state, self.solution = new, sol
        self.steps_done += 1
        self.last_dt = dt
        self.cfl_bound = cfl_dt(new, sol, p)
        if not self.adaptive and dt > self.cfl_bound and not self._cfl_warned:
            logger.warning("固定刻み dt=%.4e が CFL 上限 %.4e を超えています (t=%.4f)", dt, self.cfl_bound, new.t)
            self._cfl_warned = True
        self.min_a = min_a
        if min_a < p.a_min:
            raise RayleighTaylorViolated(min_a, p.a_min, new.t)
        return new

    def _bottom_flux_transport(self, s0: State, sol0: DivCurlSolution, s1: State, sol1: DivCurlSolution, dt: float) -> float:
        """∂t(ω_b·N_b) + ε∂x(ω_b·N_b V_{b,x}) の時間中点での残差"""
        grid = sol1.geometry.grid
        f0, f1 = trace(s0.omega[2], "bottom"), trace(s1.omega[2], "bottom")
        v0, v1 = trace(sol0.U[0], "bottom"), trace(sol1.U[0], "bottom")
        flux = 0.5 * (f0 * v0 + f1 * v1)
        res = (f1 - f0) / dt + self.params.eps * spectral.dx(flux, grid)
        return float(np.max(np.abs(res)))

    def run(self, T: float, callback=None) -> State:
        remaining, dt = steps_for(T - self.state.t, self.dt_max)
        logger.info("simulation start: steps=%d dt=%.4e T=%.4f", remaining, dt, T)
        while remaining > 0:
            self.advance(dt)
            remaining -= 1
            if callback is not None:
                callback(self)
            if self.adaptive and remaining > 0 and dt > self.cfl_bound:
                remaining, dt = steps_for(T - self.state.t, self.cfl_bound)
                logger.debug("CFL により再分割: steps=%d dt=%.4e t=%.4f", remaining, dt, self.state.t)
        return self.state

    def diagnostics(self) -> Dict[str, float]:
        p = self.params
        grid = grid_for(p)
        report = energy_norm(self.state, p, solution=self.solution, min_a=self.min_a)
        e_pot = 0.5 * spectral.surface_inner(self.state.zeta, self.state.zeta, grid)
        div = divergence_residual(self.state.omega, self.solution.geometry) if np.any(self.state.omega) else 0.0
        return {
            "t": self.state.t,
            "H": report.hamiltonian,
            "E_pot": e_pot,
            "E_kin": report.hamiltonian - e_pot,
            "calE_N": report.total,
            "min_h": report.min_h,
            "min_a": self.min_a,
            "div_omega_max": div,
            "mass": float(np.sum(self.state.zeta) * grid.dx),
        }

    def flux_diagnostics(self) -> Dict[str, float]:
        generalized_dn_from(self.solution)
        return {
            "t": self.state.t,
            "dn_mean": self.solution.report.dn_mean,
            "surface_identity": self.solution.report.surface_identity,
            "bottom_identity": self.solution.report.bottom_identity,
            "bottom_flux_transport": self.bottom_flux_residual,
        }


__all__ = [
    "State",
    "rhs",
    "raw_dn",
    "vertical_advection_coeff",
    "advect_vorticity",
    "surface_tendencies",
    "rayleigh_taylor",
    "gravity_wave_speed",
    "cfl_dt",
    "step",
    "energy_norm",
    "Simulation",
]
