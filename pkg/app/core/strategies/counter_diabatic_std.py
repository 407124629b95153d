from typing import Callable

from app.core.linalg import OperatorMatrix
from app.core.model import DriveMode, EngineParams, Stage, h_effective
from app.core.strategies.strong_coupling_std import StrongCouplingStrategy


class CounterDiabaticStrategy(StrongCouplingStrategy):
    """
    Infinite-coupling limit of the lubricated drive: the joint state evolves
    under h_effective, so the working medium follows the counter-diabatic
    (transitionless) protocol exactly.
    """

    mode = DriveMode.COUNTER_DIABATIC

    def generator(self, p: EngineParams, stage: Stage) -> Callable[[float], OperatorMatrix]:
        return lambda s: h_effective(p, s, stage)
