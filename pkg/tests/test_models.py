import pytest
from pydantic import ValidationError

from app.models import FilterSpec, InitialCondition, JustifySpec, Params, RunConfig

pytestmark = pytest.mark.unit


def test_params_defaults():
    """既定値: 周期 2π, 2/3 則 + 指数フィルタ (α=36, p=16)。"""
    p = Params(eps=0.1, mu=0.5)
    assert p.nx == 32 and p.nz == 16
    assert p.filter.alpha == 36.0 and p.filter.order == 16 and p.filter.two_thirds


@pytest.mark.parametrize("nx", [6, 33])
def test_params_rejects_bad_nx(nx):
    """nx は 8 以上の偶数。"""
    with pytest.raises(ValidationError):
        Params(eps=0.1, mu=0.5, nx=nx)


def test_params_rejects_small_nz():
    with pytest.raises(ValidationError):
        Params(eps=0.1, mu=0.5, nz=4)


def test_params_regime_bounds():
    """ε > ε0, μ > μ0 は拒否。上限を広げれば通る。"""
    with pytest.raises(ValidationError):
        Params(eps=1.5, mu=0.5)
    with pytest.raises(ValidationError):
        Params(eps=0.1, mu=2.0)
    assert Params(eps=1.5, mu=2.0, eps_max=2.0, mu_max=2.0).eps == 1.5


def test_params_is_frozen():
    p = Params(eps=0.1, mu=0.5)
    with pytest.raises(ValidationError):
        p.eps = 0.2


def test_filter_order_must_be_even():
    with pytest.raises(ValidationError):
        FilterSpec(order=15)


def test_initial_condition_requires_family_parameters():
    """standing_wave は振幅か ψ、shear_vorticity は強さが必須。"""
    with pytest.raises(ValidationError):
        InitialCondition(kind="standing_wave")
    with pytest.raises(ValidationError):
        InitialCondition(kind="shear_vorticity")
    with pytest.raises(ValidationError):
        InitialCondition(kind="manufactured", manufactured_id=2)
    assert InitialCondition(kind="shear_vorticity", strength=1.0).component == 1


def test_justify_mus_validation():
    with pytest.raises(ValidationError):
        JustifySpec(mus=[0.01])
    with pytest.raises(ValidationError):
        JustifySpec(mus=[0.01, -0.1])


def test_run_config_from_json():
    """JSON から読み込み、scenario の前後空白を除去する。"""
    cfg = RunConfig.model_validate_json(
        '{"scenario": "  rest ", "params": {"eps": 0.1, "mu": 0.5, "nx": 16, "nz": 8}}')
    assert cfg.scenario == "rest"
    assert cfg.params.nx == 16
    assert cfg.initial.kind == "rest"


def test_run_config_rejects_blank_scenario():
    with pytest.raises(ValidationError):
        RunConfig.model_validate({"scenario": "   ", "params": {"eps": 0.1, "mu": 0.5}})
