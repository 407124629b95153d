import logging
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

from app.core.ledger import (
    CycleLedger,
    DriveCostNorm,
    coherence_l1,
    cycle_heat_and_work,
    drive_cost,
    friction_work,
    ideal_otto,
    joint_work_strong_coupling,
    thermalization_time,
)
from app.core.linalg import DensityOperator, trace_distance
from app.core.model import (
    DriveMode,
    EngineParams,
    Stage,
    h_cold,
    h_hot,
    h_total,
    stroke_duration,
    thermal_state,
)
from app.core.propagation import DEFAULT_SETTINGS, PropagationSettings, propagate_lindblad
from app.core.strategies import (
    BareStrategy,
    BaseDriveStrategy,
    CounterDiabaticStrategy,
    StrokeContext,
    StrokeResult,
    StrongCouplingStrategy,
    ZenoStrategy,
)
from app.core.zeno import MeasurementBasis


# Configure Logging
logger = logging.getLogger(__name__)


class EngineOptions(BaseModel):
    """Cycle-level switches that are not part of the physical model."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    cycles: int = Field(5, ge=1, description="Cycles run before the last one is reported.")
    include_reset_cost: bool = False
    drive_cost_norm: DriveCostNorm = "trace"
    stream_keys: Tuple[int, ...] = ()


@dataclass(frozen=True)
class CycleRun:
    """Stroke-boundary states ρ(0), ρ(t₁), ρ(t₂), ρ(t₃), ρ(τ) plus both work strokes."""

    states: Tuple[DensityOperator, ...]
    compression: StrokeResult
    expansion: StrokeResult


class OttoEngine:
    """
    Four-stroke Otto cycle runner.
    Work strokes are delegated to the strategy of the selected drive mode;
    isochores always integrate the bath dissipator for their configured duration.
    """

    def __init__(
        self,
        params: EngineParams,
        drive_mode: DriveMode = DriveMode.BARE,
        basis: MeasurementBasis = MeasurementBasis.X,
        settings: PropagationSettings = DEFAULT_SETTINGS,
        options: Optional[EngineOptions] = None,
    ):
        """
        Initialize the Engine.

        Args:
            params (EngineParams): Model parameters.
            drive_mode (DriveMode): How the work strokes are driven.
            basis (MeasurementBasis): Lubricant measurement basis (Zeno mode only).
            settings (PropagationSettings): Integrator resolution.
            options (Optional[EngineOptions]): Cycle count and cost switches.
        """
        self.params = params
        self.drive_mode = drive_mode
        self.basis = basis
        self.settings = settings
        self.options = options or EngineOptions()

        # Registry of Strategies
        self.strategies: Dict[DriveMode, BaseDriveStrategy] = {
            DriveMode.BARE: BareStrategy(),
            DriveMode.STRONG_COUPLING: StrongCouplingStrategy(),
            DriveMode.ZENO_MONITORED: ZenoStrategy(),
            DriveMode.COUNTER_DIABATIC: CounterDiabaticStrategy(),
        }

    @property
    def strategy(self) -> BaseDriveStrategy:
        return self.strategies[self.drive_mode]

    def initial_state(self) -> DensityOperator:
        """Gibbs state of H_cold at T_c, the state at the end of an ideal cold isochore."""
        return thermal_state(h_cold(self.params), self.params.T_c)

    def _context(self, cycle_index: int) -> StrokeContext:
        return StrokeContext(
            settings=self.settings,
            basis=self.basis,
            master_seed=self.params.master_seed,
            stream_keys=(*self.options.stream_keys, cycle_index),
            include_reset_cost=self.options.include_reset_cost,
        )

    def run_work_stroke(
        self, stage: Stage, rho_S: Optional[DensityOperator] = None, cycle_index: int = 0
    ) -> StrokeResult:
        """Single compression or expansion stroke; starts from the cold Gibbs state by default."""
        rho_S = rho_S or self.initial_state()
        return self.strategy.run_stroke(self.params, stage, rho_S, self._context(cycle_index))

    def run_cycle(self, rho_start: DensityOperator, cycle_index: int = 0) -> CycleRun:
        p = self.params
        compression = self.run_work_stroke(Stage.COMPRESSION, rho_start, cycle_index)
        rho_2 = propagate_lindblad("hot", p, compression.rho_S_final, p.tau_hot, self.settings)
        expansion = self.run_work_stroke(Stage.EXPANSION, rho_2, cycle_index)
        rho_4 = propagate_lindblad("cold", p, expansion.rho_S_final, p.tau_cold, self.settings)
        states = (rho_start, compression.rho_S_final, rho_2, expansion.rho_S_final, rho_4)
        return CycleRun(states, compression, expansion)

    def run(self, rho_start: Optional[DensityOperator] = None) -> CycleLedger:
        """
        Iterates the cycle ``options.cycles`` times and books the last one.

        Returns:
            CycleLedger: Thermodynamic record of the final cycle.

        Raises:
            NumericalInvariantError: If any stroke breaks a state invariant.
        """
        rho = rho_start or self.initial_state()
        logger.info(
            f"Running {self.options.cycles} {self.drive_mode.value} cycle(s) "
            f"(τ={self.params.tau:.4g}, Γ=({self.params.gamma_comp:g}, {self.params.gamma_exp:g}))"
        )
        last: Optional[CycleRun] = None
        for k in range(self.options.cycles):
            last = self.run_cycle(rho, k)
            rho = last.states[-1]
        return self.book(last)

    def _joint_endpoints(self, stage: Stage, result: StrokeResult):
        p = self.params
        return (
            h_total(p, 0.0, stage),
            h_total(p, stroke_duration(p, stage), stage),
            result.rho_SL_initial,
            result.rho_SL_final,
        )

    def book(self, run: CycleRun) -> CycleLedger:
        """Assembles the ledger row of one cycle."""
        p = self.params
        comp, exp = run.compression, run.expansion
        energetics = cycle_heat_and_work(p, *run.states)
        ideal = ideal_otto(p)

        if comp.rho_SL_final is not None:
            w_joint = joint_work_strong_coupling(
                [self._joint_endpoints(Stage.COMPRESSION, comp), self._joint_endpoints(Stage.EXPANSION, exp)]
            )
        else:
            w_joint = energetics["W_tot"]

        if self.drive_mode is DriveMode.BARE:
            cost = 0.0
        else:
            norm = self.options.drive_cost_norm
            cost = drive_cost(p, Stage.COMPRESSION, norm) + drive_cost(p, Stage.EXPANSION, norm)

        return CycleLedger(
            **energetics,
            eta_otto=ideal.eta_otto,
            eta_carnot=ideal.eta_carnot,
            eta_ca=ideal.eta_ca,
            W_ideal=ideal.W_tot,
            extraction_ok=ideal.extraction_ok,
            friction_comp=friction_work(p, Stage.COMPRESSION, comp.times, comp.path).coherent_part,
            friction_exp=friction_work(p, Stage.EXPANSION, exp.times, exp.path).coherent_part,
            W_joint_sc=w_joint,
            W_zeno=comp.zeno_work + exp.zeno_work,
            meas_heat=comp.meas_heat + exp.meas_heat,
            decoupling_cost=comp.decoupling_cost + exp.decoupling_cost,
            meas_energy_cost=comp.meas_energy_cost + exp.meas_energy_cost,
            entropy_production=comp.entropy_production + exp.entropy_production,
            drive_cost_per_cycle=cost,
            net_power=energetics["power"] - cost / p.tau,
            tau_therm_hot=thermalization_time(p, "hot")[1],
            tau_therm_cold=thermalization_time(p, "cold")[1],
            coherence_comp=coherence_l1(run.states[1], h_hot(p)),
            coherence_exp=coherence_l1(run.states[3], h_cold(p)),
            negativity_comp=comp.extras.get("negativity", 0.0),
            jump_count=comp.jump_count + exp.jump_count,
            cycle_closure=trace_distance(run.states[0].matrix, run.states[-1].matrix),
        )
