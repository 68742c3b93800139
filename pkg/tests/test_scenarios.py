import numpy as np
import pytest

from app.models import InitialCondition
from app.scenarios import SCENARIOS, build_initial
from app.scenarios.random_state import random_state
from app.scenarios.shear_vorticity import shear_profile
from app.services import spectral
from app.services.divcurl import divergence_residual, grid_for
from app.services.geometry import build_geometry

pytestmark = pytest.mark.unit


def test_registered_scenarios():
    assert set(SCENARIOS) == {"rest", "standing_wave", "shear_vorticity", "manufactured"}


def test_standing_wave(params, grid):
    s = build_initial(InitialCondition(kind="standing_wave", amplitude=0.2, mode=2, potential=0.1), params)
    assert np.allclose(s.zeta, 0.2 * np.cos(2 * grid.x), atol=1e-15)
    assert np.allclose(s.psi, 0.1 * np.sin(2 * grid.x), atol=1e-15)
    assert not np.any(s.omega)


def test_shear_profiles(grid):
    assert np.all(shear_profile(grid.z, "uniform") == 1.0)
    assert shear_profile(grid.z, "linear")[-1] == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        shear_profile(grid.z, "parabolic")


def test_transverse_shear_is_projected(params):
    """横断シアは発散ゼロへ射影され、ω₃ が補われる。"""
    ic = InitialCondition(kind="shear_vorticity", amplitude=0.2, strength=1.0, component=1, profile="linear")
    s = build_initial(ic, params)
    G = build_geometry(s.zeta, params.eps, params.mu, grid_for(params), params.h_min)
    assert divergence_residual(s.omega, G) < 1e-10
    assert np.any(s.omega[2])
    assert not np.any(s.omega[1])


def test_manufactured_state_is_mean_free(params):
    s = build_initial(InitialCondition(kind="manufactured", amplitude=0.1), params)
    assert abs(spectral.mean(s.psi)) < 1e-14
    assert np.any(s.omega)
    flat = build_initial(InitialCondition(kind="manufactured", manufactured_id=1), params)
    assert not np.any(flat.zeta) and not np.any(flat.omega)


def test_random_state_is_reproducible(params):
    a = random_state(np.random.default_rng(7), params, vorticity=0.5, transverse=True)
    b = random_state(np.random.default_rng(7), params, vorticity=0.5, transverse=True)
    assert np.array_equal(a.zeta, b.zeta) and np.array_equal(a.omega, b.omega)
    assert abs(spectral.mean(a.zeta)) < 1e-15 and abs(spectral.mean(a.psi)) < 1e-15
