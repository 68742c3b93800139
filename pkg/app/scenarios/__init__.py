"""名前付き初期条件。InitialCondition.kind から State を組み立てる。"""
from __future__ import annotations

from typing import Callable, Dict

from app.models import InitialCondition, Params
from app.scenarios.manufactured import manufactured_state
from app.scenarios.rest import rest_state
from app.scenarios.shear_vorticity import shear_vorticity_state
from app.scenarios.standing_wave import standing_wave_state
from app.services.dynamics import State

Builder = Callable[[InitialCondition, Params], State]

SCENARIOS: Dict[str, Builder] = {
    "rest": rest_state,
    "standing_wave": standing_wave_state,
    "shear_vorticity": shear_vorticity_state,
    "manufactured": manufactured_state,
}


def build_initial(ic: InitialCondition, params: Params) -> State:
    try:
        builder = SCENARIOS[ic.kind]
    except KeyError:
        raise ValueError(f"未知の初期条件です: {ic.kind}") from None
    return builder(ic, params)


__all__ = ["SCENARIOS", "build_initial"]
