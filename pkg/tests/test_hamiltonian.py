import numpy as np
import pytest

from app.errors import InadmissibleDirection, InadmissibleFunctional
from app.scenarios.random_state import random_state, random_surface_field, random_volume_field
from app.services import spectral
from app.services.divcurl import generalized_dn_from, grid_for, reconstruct_velocity
from app.services.dynamics import State
from app.services.geometry import build_geometry
from app.services.hamiltonian import (
    apply_J,
    bracket_scale,
    cotangent_defect,
    cotangent_residual,
    energy_functional,
    energy_parts,
    fd_check,
    grad_momentum_x,
    grad_total_energy,
    hamiltonian_consistency,
    j_antisymmetry_defect,
    linear_observable,
    mass_functional,
    momentum_functional,
    pairing,
    poisson_bracket,
    rhs_matches_gradient,
    surface_linear_functional,
    total_energy,
)

pytestmark = pytest.mark.unit

H_LIST = [1e-3, 1e-4]


def _zeros_direction(grid) -> State:
    return State(t=0.0, zeta=grid.surface_zeros(), psi=grid.surface_zeros(), omega=grid.vector_zeros())


def test_rest_has_zero_energy_and_gradient(params):
    s = State.rest(params)
    assert total_energy(s, params) == 0.0
    for g in grad_total_energy(s, params):
        assert not np.any(g)


def test_potential_energy_single_mode(params, grid):
    """ζ = 0.1cos x, ψ = ω = 0: H = ½·0.01·π。"""
    s = State(t=0.0, zeta=0.1 * np.cos(grid.x), psi=grid.surface_zeros(), omega=grid.vector_zeros())
    assert total_energy(s, params) == pytest.approx(0.015707963, abs=1e-9)


def test_flat_kinetic_energy_matches_dn_symbol(params, grid):
    """ζ = 0, ψ = 0.1 sin x: 運動エネルギー = ½∫ψGψ。"""
    s = State(t=0.0, zeta=grid.surface_zeros(), psi=0.1 * np.sin(grid.x), omega=grid.vector_zeros())
    e_pot, e_kin = energy_parts(s, params)
    expected = 0.5 * 0.01 * np.pi * spectral.dn_symbol(params.mu)(1.0)
    assert e_pot == 0.0
    assert e_kin == pytest.approx(expected, abs=1e-10)


def test_fd_linear_observable_is_exact(params, grid):
    s = random_state(np.random.default_rng(1), params)
    F = linear_observable(np.cos(grid.x))
    direction = _zeros_direction(grid)
    direction = State(t=0.0, zeta=np.cos(grid.x), psi=direction.psi, omega=direction.omega)
    report = fd_check(F, s, direction, H_LIST, params)
    assert report.predicted == pytest.approx(np.pi, rel=1e-12)
    assert report.min_error < 1e-10


def test_fd_energy_zeta_direction(params, rng):
    """渦なし状態で ζ 方向の差分と勾配が一致する。"""
    grid = grid_for(params)
    s = random_state(rng, params)
    direction = State(t=0.0, zeta=random_surface_field(rng, params, 1.0), psi=grid.surface_zeros(),
                      omega=grid.vector_zeros())
    report = fd_check(energy_functional(), s, direction, H_LIST, params)
    assert report.min_error < 1e-6


def test_fd_energy_psi_direction_with_vorticity(params, rng):
    grid = grid_for(params)
    s = random_state(rng, params, vorticity=0.5)
    direction = State(t=0.0, zeta=grid.surface_zeros(), psi=random_surface_field(rng, params, 1.0),
                      omega=grid.vector_zeros())
    report = fd_check(energy_functional(), s, direction, H_LIST, params)
    assert report.min_error < 1e-6


def test_fd_energy_in_plane_vorticity_direction(params, rng):
    """ω₂ のみの方向（発散ゼロ、底面フラックス 0）。"""
    grid = grid_for(params)
    s = random_state(rng, params, vorticity=0.5)
    omega = grid.vector_zeros()
    omega[1] = random_volume_field(rng, params, 1.0)
    direction = State(t=0.0, zeta=grid.surface_zeros(), psi=grid.surface_zeros(), omega=omega)
    report = fd_check(energy_functional(), s, direction, H_LIST, params)
    assert report.min_error < 1e-6


def test_fd_energy_vorticity_direction_on_potential_flow(params, rng):
    """ω = 0 でも δH/δω = curl⁻¹U^μ は 0 ではない。"""
    grid = grid_for(params)
    s = random_state(rng, params)
    omega = grid.vector_zeros()
    omega[1] = random_volume_field(rng, params, 1.0)
    direction = State(t=0.0, zeta=grid.surface_zeros(), psi=grid.surface_zeros(), omega=omega)
    report = fd_check(energy_functional(), s, direction, H_LIST, params)
    assert abs(report.predicted) > 0.0
    assert report.min_error < 1e-6


def test_fd_rejects_inadmissible_directions(params, grid):
    s = State.rest(params)
    with pytest.raises(InadmissibleDirection):
        fd_check(energy_functional(), s,
                 State(t=0.0, zeta=1.0 + np.cos(grid.x), psi=grid.surface_zeros(), omega=grid.vector_zeros()),
                 H_LIST, params)
    omega = grid.vector_zeros()
    omega[0] = np.cos(grid.x)[:, None] * np.ones(grid.nz)
    with pytest.raises(InadmissibleDirection):
        fd_check(energy_functional(), s,
                 State(t=0.0, zeta=grid.surface_zeros(), psi=grid.surface_zeros(), omega=omega),
                 H_LIST, params)


def test_bracket_reduces_to_canonical_form_without_vorticity(params, rng):
    """ω = 0 では {F,G} = ∫(δ_ζF δ_ψG − δ_ψF δ_ζG)。"""
    grid = grid_for(params)
    s = random_state(rng, params)
    f1, f2, g1, g2 = (random_surface_field(rng, params, 1.0) for _ in range(4))
    F = surface_linear_functional(f1, f2)
    Gf = surface_linear_functional(g1, g2)
    canonical = spectral.surface_inner(f1, g2, grid) - spectral.surface_inner(f2, g1, grid)
    assert abs(poisson_bracket(F, Gf, s, params) - canonical) < 1e-13


TIGHT = {"krylov_rtol": 1e-12, "krylov_maxiter": 400}


def _relative_bracket(F, H, s, params) -> float:
    """|{F,H}| を Cauchy–Schwarz の上界で割った値"""
    G = build_geometry(s.zeta, params.eps, params.mu, grid_for(params), params.h_min)
    gF, gH = F.gradient(s, params), H.gradient(s, params)
    jF, jH = apply_J(s, params, gF, G), apply_J(s, params, gH, G)
    return abs(poisson_bracket(F, H, s, params)) / bracket_scale(gF, gH, jF, jH, G)


def test_mass_commutes_with_energy(params, rng):
    """除去前の DN 平均が小さいことも確かめる（除去後の ∫G = 0 は自明）。"""
    p = params.model_copy(update=TIGHT)
    s = random_state(rng, p, vorticity=0.5)
    sol = reconstruct_velocity(s.zeta, s.psi, s.omega, p)
    dn = generalized_dn_from(sol)
    assert abs(sol.report.dn_mean) < 1e-11 * spectral.field_scale(dn)
    assert abs(poisson_bracket(mass_functional(), energy_functional(), s, p)) < 1e-10


def test_bracket_pairs_gradient_with_J_directly(params, rng):
    """{φ,H} = ∫φG、{H,φ} = −∫φG。対称化せずに両方向を評価する。"""
    grid = grid_for(params)
    s = random_state(rng, params, vorticity=0.5)
    phi = random_surface_field(rng, params, 1.0)
    F = linear_observable(phi, "phi")
    _, dn, _ = grad_total_energy(s, params)
    expected = spectral.surface_inner(phi, dn, grid)
    assert abs(expected) > 1e-6
    assert poisson_bracket(F, energy_functional(), s, params) == pytest.approx(expected, rel=1e-10)
    assert poisson_bracket(energy_functional(), F, s, params) == pytest.approx(-expected, rel=1e-10)


@pytest.mark.parametrize("transverse", [False, True])
def test_inadmissible_functional_is_rejected(params, rng, transverse):
    """ω ≠ 0 で ψ 成分だけを持つ勾配は余接条件を満たさない。"""
    s = random_state(rng, params, vorticity=0.5, transverse=transverse)
    F = surface_linear_functional(random_surface_field(rng, params, 1.0), random_surface_field(rng, params, 1.0))
    with pytest.raises(InadmissibleFunctional):
        poisson_bracket(F, energy_functional(), s, params)
    with pytest.raises(InadmissibleFunctional):
        j_antisymmetry_defect(energy_functional(), F, s, params)


@pytest.mark.parametrize("transverse", [False, True])
def test_j_is_antisymmetric_on_admissible_pairs(params, rng, transverse):
    s = random_state(rng, params, vorticity=0.5, transverse=transverse)
    phi = linear_observable(random_surface_field(rng, params, 1.0), "phi")
    H, P, M = energy_functional(), momentum_functional(), mass_functional()
    for F, Gf in [(phi, H), (M, H), (P, phi), (P, M)]:
        assert j_antisymmetry_defect(F, Gf, s, params) < 1e-11


def test_j_is_antisymmetric_without_vorticity(params, rng):
    s = random_state(rng, params)
    F = surface_linear_functional(random_surface_field(rng, params, 1.0), random_surface_field(rng, params, 1.0))
    assert j_antisymmetry_defect(F, energy_functional(), s, params) < 1e-11


def test_momentum_gradient_is_admissible(params, rng):
    s = random_state(rng, params, vorticity=0.5, transverse=True)
    assert cotangent_residual(grad_momentum_x(s, params), s, params) < 1e-12


@pytest.mark.parametrize("component", ["zeta", "psi", "omega"])
def test_fd_momentum(params, rng, component):
    grid = grid_for(params)
    s = random_state(rng, params, vorticity=0.5)
    zeta, psi, omega = grid.surface_zeros(), grid.surface_zeros(), grid.vector_zeros()
    if component == "zeta":
        zeta = random_surface_field(rng, params, 1.0)
    elif component == "psi":
        psi = random_surface_field(rng, params, 1.0)
    else:
        omega[1] = random_volume_field(rng, params, 1.0)
    direction = State(t=0.0, zeta=zeta, psi=psi, omega=omega)
    report = fd_check(momentum_functional(), s, direction, H_LIST, params)
    assert abs(report.predicted) > 0.0
    assert report.min_error < 1e-6


def test_momentum_commutes_with_energy_without_vorticity(params, rng):
    p = params.model_copy(update=TIGHT)
    s = random_state(rng, p)
    assert _relative_bracket(momentum_functional(), energy_functional(), s, p) < 1e-8


def test_momentum_commutes_with_energy_with_vorticity(params, rng):
    p = params.model_copy(update=TIGHT)
    s = random_state(rng, p, vorticity=0.5)
    assert _relative_bracket(momentum_functional(), energy_functional(), s, p) < 1e-5


def test_fd_energy_psi_direction_with_transverse_vorticity(params, rng):
    grid = grid_for(params)
    s = random_state(rng, params, vorticity=0.5, transverse=True)
    direction = State(t=0.0, zeta=grid.surface_zeros(), psi=random_surface_field(rng, params, 1.0),
                      omega=grid.vector_zeros())
    report = fd_check(energy_functional(), s, direction, H_LIST, params)
    assert report.min_error < 1e-6


def test_rhs_rows_match_gradient_without_vorticity(params, rng):
    match = rhs_matches_gradient(random_state(rng, params), params)
    assert match["zeta_row"] < 1e-12
    assert match["psi_row"] < 1e-12
    assert match["omega_row"] == 0.0


def test_rhs_rows_match_gradient_with_vorticity(params, rng):
    p = params.model_copy(update=TIGHT)
    match = rhs_matches_gradient(random_state(rng, p, vorticity=0.5), p)
    assert match["zeta_row"] < 1e-12
    assert match["psi_row"] < 1e-8
    assert match["omega_row"] < 1e-6


def test_rhs_rows_match_gradient_with_transverse_vorticity(params, rng):
    p = params.model_copy(update=TIGHT)
    match = rhs_matches_gradient(random_state(rng, p, vorticity=0.5, transverse=True), p)
    assert match["zeta_row"] < 1e-12
    assert match["psi_row"] < 1e-6
    assert match["omega_row"] < 1e-6


@pytest.mark.parametrize("transverse", [False, True])
def test_cotangent_identity(params, rng, transverse):
    """∂x(δH/δω)̲₂/√μ = δH/δψ。"""
    p = params.model_copy(update=TIGHT)
    s = random_state(rng, p, vorticity=0.5, transverse=transverse)
    assert cotangent_defect(s, p) < 1e-8


def test_consistency_requires_three_states(params):
    s = State.rest(params)
    with pytest.raises(ValueError):
        hamiltonian_consistency([s, s], mass_functional(), params)
