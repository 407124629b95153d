# Expose strategies for easier imports
from app.core.strategies.base import BaseDriveStrategy, StrokeContext, StrokeResult
from app.core.strategies.bare_std import BareStrategy
from app.core.strategies.counter_diabatic_std import CounterDiabaticStrategy
from app.core.strategies.strong_coupling_std import StrongCouplingStrategy
from app.core.strategies.zeno_std import ZenoStrategy
