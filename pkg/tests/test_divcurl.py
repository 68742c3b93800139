import numpy as np
import pytest

from app.errors import BottomFluxNotZero, KrylovNoConvergence, MeanNotZero, NotDivergenceFree
from app.scenarios.manufactured import manufactured_fields
from app.scenarios.random_state import random_state
from app.services import spectral
from app.services.divcurl import (
    curl_inverse,
    divergence_residual,
    generalized_DN,
    generalized_dn_from,
    grid_for,
    project_div_free,
    reconstruct_velocity,
    solve_potential,
    solve_tilde_psi,
)
from app.services.elliptic import SigmaEllipticSolver
from app.services.geometry import build_geometry, scaled_curl, scaled_grad, trace

from .conftest import make_params

pytestmark = pytest.mark.unit


def _rel(a, b) -> float:
    return float(np.max(np.abs(a - b))) / spectral.field_scale(b)


def test_flat_potential_matches_closed_form(params, grid):
    """ζ=0, ψ=cos x: φ = cos x cosh(√μ(z+1))/cosh√μ。"""
    G = build_geometry(grid.surface_zeros(), params.eps, params.mu, grid)
    phi = solve_potential(np.cos(grid.x), G, params).u
    X, Z = grid.mesh()
    a = np.sqrt(params.mu)
    assert np.max(np.abs(phi - np.cos(X) * np.cosh(a * (Z + 1)) / np.cosh(a))) < 1e-9


def test_flat_dn_symbol(params, grid):
    """平坦帯の一般化 DN は cos x に tanh(√μ)/√μ を掛ける。"""
    dn = generalized_DN(grid.surface_zeros(), np.cos(grid.x), grid.vector_zeros(), params)
    a = np.sqrt(params.mu)
    assert np.max(np.abs(dn - np.tanh(a) / a * np.cos(grid.x))) < 1e-9


def test_zero_input_gives_zero_velocity(params, grid):
    """ψ=0, ω=0 なら U≡0 で反復もしない。"""
    sol = reconstruct_velocity(0.1 * np.cos(grid.x), grid.surface_zeros(), grid.vector_zeros(), params)
    assert not np.any(sol.U)
    assert sol.report.iterations == 0


def test_solver_rejects_conormal_with_neumann(params, grid):
    """水面余法線と底面 Neumann の組は一意性がないので ValueError。"""
    G = build_geometry(grid.surface_zeros(), params.eps, params.mu, grid)
    with pytest.raises(ValueError):
        SigmaEllipticSolver(G, "conormal", "neumann")


def test_krylov_failure_is_reported(grid):
    """反復 1 回で 1e-14 は達成できず KrylovNoConvergence。"""
    G = build_geometry(0.3 * np.cos(grid.x), 1.0, 0.5, grid)
    solver = SigmaEllipticSolver(G, "dirichlet", "neumann", rtol=1e-14, maxiter=1, restart=1)
    with pytest.raises(KrylovNoConvergence) as exc:
        solver.solve(grid.volume_zeros(), np.cos(grid.x), grid.surface_zeros())
    assert exc.value.residual > 1e-14


def test_tilde_psi_inverts_second_derivative(params, grid):
    """平坦帯で ω̲₃ = cos x なら ψ̃ = −cos x、cos 2x なら −cos(2x)/4。"""
    G = build_geometry(grid.surface_zeros(), params.eps, params.mu, grid)
    for k, expected in ((1, -np.cos(grid.x)), (2, -np.cos(2 * grid.x) / 4)):
        omega = grid.vector_zeros()
        omega[2] = np.cos(k * grid.x)[:, None]
        assert np.max(np.abs(solve_tilde_psi(omega, G) - expected)) < 1e-13


def test_tilde_psi_rejects_mean_flux(params, grid):
    """水面フラックスに平均があると strict では MeanNotZero。"""
    G = build_geometry(grid.surface_zeros(), params.eps, params.mu, grid)
    omega = grid.vector_zeros()
    omega[2] = 1.0
    with pytest.raises(MeanNotZero):
        solve_tilde_psi(omega, G)


def test_constant_transverse_shear(params, grid):
    """平坦帯で ω₁ = c 一定: V_y = −√μ c z、V_x = w = 0。"""
    c = 0.8
    omega = grid.vector_zeros()
    omega[0] = c
    sol = reconstruct_velocity(grid.surface_zeros(), grid.surface_zeros(), omega, params)
    Z = grid.mesh()[1]
    assert np.max(np.abs(sol.U[1] + np.sqrt(params.mu) * c * Z)) < 1e-12
    assert np.max(np.abs(sol.U[0])) < 1e-12 and np.max(np.abs(sol.U[2])) < 1e-12


def test_manufactured_rotational_flow():
    """製造解（回転流 + 横断流）を再構成し、誤差と水面・底面の恒等式を確認する。"""
    p = make_params(eps=1.0, mu=0.5, nx=32, nz=16)
    state, U_exact = manufactured_fields(0, 0.1, p)
    sol = reconstruct_velocity(state.zeta, state.psi, state.omega, p)
    assert np.max(np.abs(sol.U - U_exact)) < 1e-6
    assert sol.report.surface_identity < 1e-8
    assert sol.report.bottom_identity < 1e-8
    assert sol.report.bottom_w_max < 1e-8


def test_manufactured_flat_potential_flow():
    """製造解（平坦帯の単一モードのポテンシャル流）。"""
    p = make_params(nx=32, nz=16)
    state, U_exact = manufactured_fields(1, 0.0, p)
    sol = reconstruct_velocity(state.zeta, state.psi, state.omega, p)
    assert np.max(np.abs(sol.U - U_exact)) < 1e-9


def test_reconstruction_is_linear(params, grid):
    """(ψ, ω) について線形（重ね合わせ）。"""
    p = make_params(eps=0.5)
    state, _ = manufactured_fields(0, 0.1, p)
    psi2 = 0.3 * np.sin(2 * grid.x)
    a = reconstruct_velocity(state.zeta, state.psi, state.omega, p)
    b = reconstruct_velocity(state.zeta, psi2, grid.vector_zeros(), p)
    ab = reconstruct_velocity(state.zeta, state.psi + psi2, state.omega, p)
    assert _rel(ab.U, a.U + b.U) < 1e-7


def test_solution_independent_of_initial_guess(params, grid, rng):
    """Krylov の初期値を変えても解は一致する。"""
    G = build_geometry(0.2 * np.cos(grid.x), 0.5, params.mu, grid)
    psi = np.cos(grid.x) + 0.2 * np.sin(3 * grid.x)
    u0 = solve_potential(psi, G, params).u
    u1 = solve_potential(psi, G, params, x0=rng.standard_normal(grid.nx * grid.nz)).u
    assert _rel(u1, u0) < 1e-8


def test_curl_inverse_recovers_field():
    """発散ゼロで底面法線成分 0 の C について curl(curl⁻¹C) = C、B₂ と B₃ は底面で 0。"""
    p = make_params(eps=1.0, mu=0.5, nx=32, nz=16)
    state, _ = manufactured_fields(0, 0.1, p)
    sol = reconstruct_velocity(state.zeta, state.psi, state.omega, p)
    C = sol.U_mu
    B = curl_inverse(C, sol.geometry, p)
    assert _rel(scaled_curl(B, sol.geometry), C) < 1e-7
    assert np.max(np.abs(trace(B[1], "bottom"))) < 1e-12
    assert np.max(np.abs(trace(B[2], "bottom"))) < 1e-9


def test_curl_inverse_guards(params, grid):
    """発散を持つ C は NotDivergenceFree、底面法線成分を持つ C は BottomFluxNotZero。"""
    G = build_geometry(grid.surface_zeros(), params.eps, params.mu, grid)
    C = grid.vector_zeros()
    C[0] = np.sin(grid.x)[:, None]
    with pytest.raises(NotDivergenceFree):
        curl_inverse(C, G, params)
    C = grid.vector_zeros()
    C[2] = 1.0
    with pytest.raises(BottomFluxNotZero):
        curl_inverse(C, G, params)


def test_projection_is_idempotent(params, grid, rng):
    """π∘π = π、出力は発散ゼロ。"""
    G = build_geometry(0.1 * np.cos(grid.x), 0.5, params.mu, grid)
    X, Z = grid.mesh()
    omega = np.stack([np.cos(X) * (1 + Z), np.sin(2 * X) * Z, np.cos(X + 0.4) * Z ** 2])
    once = project_div_free(omega, G, params)
    twice = project_div_free(once, G, params)
    assert divergence_residual(once, G) < 1e-8
    assert _rel(twice, once) < 1e-9


def test_projection_keeps_in_plane_vorticity(params, grid):
    """ω₂ のみの場はすでに発散ゼロで、射影で変化しない。"""
    G = build_geometry(0.1 * np.cos(grid.x), 0.5, params.mu, grid)
    X, Z = grid.mesh()
    omega = grid.vector_zeros()
    omega[1] = np.cos(X) * (1 + Z)
    assert np.max(np.abs(project_div_free(omega, G, params) - omega)) < 1e-12


def test_projection_annihilates_gradients(params, grid):
    """水面で 0、底面で法線微分 0 のポテンシャルの勾配は射影で消える。"""
    G = build_geometry(0.1 * np.cos(grid.x), 0.5, params.mu, grid)
    X, Z = grid.mesh()
    phi = np.cos(X) * (Z + 0.5 * Z ** 2)
    omega = scaled_grad(phi, G)
    out = project_div_free(omega, G, params)
    assert np.max(np.abs(out)) < 1e-6 * spectral.field_scale(omega)


def test_generalized_dn_is_mean_zero(grid):
    """一般化 DN の出力は平均ゼロ。"""
    p = make_params(eps=1.0)
    state, _ = manufactured_fields(0, 0.1, p)
    dn = generalized_DN(state.zeta, state.psi, state.omega, p)
    assert abs(spectral.mean(dn)) < 1e-11


@pytest.mark.parametrize("transverse", [False, True])
def test_generalized_dn_raw_mean_is_surface_flux_balance(params, rng, transverse):
    """除去前の平均は ∫∫div U = 0 の離散誤差の大きさにとどまる。"""
    tight = params.model_copy(update={"krylov_rtol": 1e-12, "krylov_maxiter": 400})
    s = random_state(rng, tight, vorticity=0.5, transverse=transverse)
    sol = reconstruct_velocity(s.zeta, s.psi, s.omega, tight)
    dn = generalized_dn_from(sol)
    assert abs(spectral.mean(dn)) < 1e-14
    assert abs(sol.report.dn_mean) < 1e-11 * spectral.field_scale(dn)
