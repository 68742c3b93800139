from app.models import InitialCondition, Params
from app.services.dynamics import State


def rest_state(ic: InitialCondition, params: Params) -> State:
    return State.rest(params)
