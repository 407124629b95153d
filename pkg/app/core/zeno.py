"""
Measurement-driven Zeno strokes.

A stroke of duration τ is split into n pulses of length δt = τ/n. Each pulse
evolves the joint state under h_total and is followed by an ideal, selective
projective measurement of the lubricant. Per-step energetics use endpoint
expectations of h_total.

Trajectory randomness comes from a counter-based Philox generator keyed by
(master_seed, *stream_keys, trajectory_index); step k consumes the k-th
uniform of that stream, so a record is a pure function of those keys.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt

from app.core.exceptions import NumericalInvariantError
from app.core.linalg import (
    I2,
    KET_0,
    KET_1,
    KET_MINUS,
    KET_PLUS,
    DensityOperator,
    OperatorMatrix,
    dagger,
    expectation,
    projector,
    tensor_product,
)
from app.core.model import EngineParams, Stage, coupling, h_total, stroke_duration
from app.core.propagation import DEFAULT_SETTINGS, PropagationSettings, propagate_unitary


# Configure Logging
logger = logging.getLogger(__name__)

DEGENERATE_PROB = 1e-15
CLOSURE_TOL = 1e-8

StepObserver = Callable[[int, float, OperatorMatrix, OperatorMatrix], None]


class MeasurementBasis(str, Enum):
    X = "x"
    COMPUTATIONAL = "computational"

    @property
    def outcomes(self) -> Tuple[str, str]:
        return ("+", "-") if self is MeasurementBasis.X else ("0", "1")

    @property
    def reference_outcome(self) -> Optional[str]:
        """Outcome the prepared lubricant |+> yields with certainty, if any."""
        return "+" if self is MeasurementBasis.X else None

    def projectors(self) -> Dict[str, OperatorMatrix]:
        """Lubricant projectors lifted to the joint space as 1 ⊗ |ℓ><ℓ|."""
        kets = (KET_PLUS, KET_MINUS) if self is MeasurementBasis.X else (KET_0, KET_1)
        return {
            label: tensor_product(I2, projector(ket)) for label, ket in zip(self.outcomes, kets)
        }


def trajectory_rng(master_seed: int, *keys: int) -> np.random.Generator:
    """Counter-based stream for one trajectory."""
    seed_seq = np.random.SeedSequence([master_seed, *keys])
    return np.random.Generator(np.random.Philox(seed_seq))


@dataclass(frozen=True)
class MeasurementResult:
    outcome: str
    post_state: DensityOperator
    prob: float


def outcome_probabilities(rho_SL: DensityOperator, basis: MeasurementBasis) -> Dict[str, float]:
    return {
        label: max(expectation(proj, rho_SL.matrix), 0.0)
        for label, proj in basis.projectors().items()
    }


def measure_lubricant(
    rho_SL: DensityOperator, basis: MeasurementBasis, rng: np.random.Generator
) -> MeasurementResult:
    """
    Selective projective measurement of the lubricant.

    The outcome is drawn by the Born rule from one uniform of ``rng`` and the
    state is projected and renormalised. No postselection.

    Raises:
        NumericalInvariantError: If both outcome probabilities are below 1e-15.
    """
    probs = outcome_probabilities(rho_SL, basis)
    first, second = basis.outcomes
    total = probs[first] + probs[second]
    if probs[first] < DEGENERATE_PROB and probs[second] < DEGENERATE_PROB:
        raise NumericalInvariantError("Both measurement outcomes have vanishing probability")

    outcome = first if rng.random() < probs[first] / total else second
    proj = basis.projectors()[outcome]
    prob = probs[outcome] / total
    post = proj @ rho_SL.matrix @ proj / probs[outcome]
    return MeasurementResult(outcome, DensityOperator.from_matrix(post), prob)


def nonselective_channel(rho_SL: DensityOperator, basis: MeasurementBasis) -> DensityOperator:
    """ρ' = Σ_ℓ P_ℓ ρ P_ℓ."""
    out = sum(proj @ rho_SL.matrix @ proj for proj in basis.projectors().values())
    return DensityOperator.from_matrix(out)


# --- Pulses ---


@dataclass(frozen=True)
class PulseSchedule:
    """Boundary times and pulse propagators of one monitored stroke."""

    times: npt.NDArray[np.float64]
    propagators: Tuple[OperatorMatrix, ...]

    @property
    def n(self) -> int:
        return len(self.propagators)


def pulse_schedule(
    p: EngineParams, stage: Stage, settings: PropagationSettings = DEFAULT_SETTINGS
) -> PulseSchedule:
    """Pulse propagators depend only on (params, stage), so all trajectories share them."""
    n = p.n_meas
    times = np.linspace(0.0, stroke_duration(p, stage), n + 1)
    gamma = coupling(p, stage)

    def hamiltonian(s: float) -> OperatorMatrix:
        return h_total(p, s, stage)

    props = tuple(
        propagate_unitary(hamiltonian, times[k], times[k + 1], settings, gamma=gamma) for k in range(n)
    )
    return PulseSchedule(times, props)


def _energy_operators(p: EngineParams, stage: Stage, times: Sequence[float]) -> List[OperatorMatrix]:
    return [h_total(p, s, stage) for s in times]


# --- Trajectories ---


@dataclass(frozen=True)
class TrajectoryRecord:
    outcomes: Tuple[str, ...]
    step_work: npt.NDArray[np.float64]
    step_meas_heat: npt.NDArray[np.float64]
    log_prob: float
    final_state: DensityOperator
    jump_count: int  # k with ℓ_{k+1} ≠ ℓ_k
    initial_energy: float = 0.0
    final_energy: float = 0.0

    def __post_init__(self):
        n = len(self.outcomes)
        if len(self.step_work) != n or len(self.step_meas_heat) != n:
            raise ValueError("Trajectory record lengths are inconsistent")
        if self.log_prob > 1e-12:
            raise ValueError("Trajectory log-probability must be non-positive")

    @property
    def n(self) -> int:
        return len(self.outcomes)

    @property
    def total_work(self) -> float:
        return float(np.sum(self.step_work))

    @property
    def total_meas_heat(self) -> float:
        return float(np.sum(self.step_meas_heat))


def run_zeno_stroke(
    p: EngineParams,
    stage: Stage,
    rho_SL_in: DensityOperator,
    basis: MeasurementBasis,
    rng: np.random.Generator,
    settings: PropagationSettings = DEFAULT_SETTINGS,
    schedule: Optional[PulseSchedule] = None,
    energies: Optional[List[OperatorMatrix]] = None,
    observer: Optional[StepObserver] = None,
) -> TrajectoryRecord:
    """
    One measurement trajectory over a work stroke.

    Args:
        p (EngineParams): Model parameters (n = p.n_meas pulses).
        stage (Stage): Compression or expansion.
        rho_SL_in (DensityOperator): Joint state at the start of the stroke.
        basis (MeasurementBasis): Lubricant measurement basis.
        rng (np.random.Generator): Stream of this trajectory.
        settings (PropagationSettings): Pulse resolution.
        schedule (Optional[PulseSchedule]): Precomputed pulses, shared across trajectories.
        energies (Optional[List[OperatorMatrix]]): h_total at the pulse boundaries.
        observer (Optional[StepObserver]): Called after every measurement with
            (k, local time, pre-measurement state, post-measurement state).

    Returns:
        TrajectoryRecord: Outcomes, δW_k, δQ_k^(meas), ln p(ℓ⃗) and the final state.

    Raises:
        NumericalInvariantError: If the energy bookkeeping does not close.
    """
    schedule = schedule or pulse_schedule(p, stage, settings)
    energies = energies or _energy_operators(p, stage, schedule.times)

    rho = rho_SL_in.matrix
    initial_energy = expectation(energies[0], rho)
    outcomes: List[str] = []
    step_work = np.zeros(schedule.n)
    step_heat = np.zeros(schedule.n)
    log_prob = 0.0
    jumps = 0
    previous: Optional[str] = None

    for k, u in enumerate(schedule.propagators):
        before = expectation(energies[k], rho)
        evolved = u @ rho @ dagger(u)
        after_pulse = expectation(energies[k + 1], evolved)
        step_work[k] = after_pulse - before

        result = measure_lubricant(DensityOperator.from_matrix(evolved), basis, rng)
        rho = result.post_state.matrix
        step_heat[k] = expectation(energies[k + 1], rho) - after_pulse
        log_prob += math.log(result.prob)
        if observer is not None:
            observer(k, float(schedule.times[k + 1]), evolved, rho)

        if previous is not None and result.outcome != previous:
            jumps += 1
        previous = result.outcome
        outcomes.append(result.outcome)

    final_energy = expectation(energies[-1], rho)
    residual = final_energy - initial_energy - step_work.sum() - step_heat.sum()
    if abs(residual) > CLOSURE_TOL:
        raise NumericalInvariantError(f"Zeno stroke bookkeeping residual {residual:.3e}")

    return TrajectoryRecord(
        outcomes=tuple(outcomes),
        step_work=step_work,
        step_meas_heat=step_heat,
        log_prob=min(log_prob, 0.0),
        final_state=DensityOperator.from_matrix(rho),
        jump_count=jumps,
        initial_energy=initial_energy,
        final_energy=final_energy,
    )


@dataclass(frozen=True)
class TrajectoryEnsemble:
    records: Tuple[TrajectoryRecord, ...]
    mean_work: float = field(init=False)
    mean_meas_heat: float = field(init=False)
    std_work: float = field(init=False)

    def __post_init__(self):
        work = np.array([r.total_work for r in self.records])
        heat = np.array([r.total_meas_heat for r in self.records])
        object.__setattr__(self, "mean_work", float(work.mean()))
        object.__setattr__(self, "mean_meas_heat", float(heat.mean()))
        object.__setattr__(self, "std_work", float(work.std()))

    @property
    def jump_fraction(self) -> float:
        """Fraction of trajectories with at least one jump."""
        return float(np.mean([r.jump_count > 0 for r in self.records]))

    @property
    def mean_jump_count(self) -> float:
        return float(np.mean([r.jump_count for r in self.records]))

    def outcome_frequency(self, outcome: str, step: int = -1) -> float:
        """Empirical probability that the outcome of ``step`` equals ``outcome``."""
        return float(np.mean([r.outcomes[step] == outcome for r in self.records]))


def _run_indexed(args) -> TrajectoryRecord:
    p, stage, rho_matrix, basis, settings, schedule, energies, seed, keys, index = args
    rng = trajectory_rng(seed, *keys, index)
    return run_zeno_stroke(
        p, stage, DensityOperator(rho_matrix), basis, rng, settings, schedule, energies
    )


def run_ensemble(
    p: EngineParams,
    stage: Stage,
    rho_SL_in: DensityOperator,
    basis: MeasurementBasis,
    n_traj: int,
    master_seed: int,
    settings: PropagationSettings = DEFAULT_SETTINGS,
    workers: int = 1,
    stream_keys: Tuple[int, ...] = (),
) -> TrajectoryEnsemble:
    """Samples ``n_traj`` independent trajectories; record i is keyed by (seed, *stream_keys, i)."""
    if n_traj < 1:
        raise ValueError("n_traj must be at least 1")
    schedule = pulse_schedule(p, stage, settings)
    energies = _energy_operators(p, stage, schedule.times)
    tasks = [
        (p, stage, rho_SL_in.matrix, basis, settings, schedule, energies, master_seed, stream_keys, i)
        for i in range(n_traj)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            records = list(executor.map(_run_indexed, tasks))
    else:
        records = [_run_indexed(task) for task in tasks]
    logger.debug(f"Ensemble of {n_traj} trajectories on {stage.value} (n={p.n_meas})")
    return TrajectoryEnsemble(tuple(records))


# --- Exact ensemble expectations ---


@dataclass(frozen=True)
class StrokeExpectation:
    """Trajectory averages computed from the averaged (nonselective) state."""

    step_work: npt.NDArray[np.float64]
    step_meas_heat: npt.NDArray[np.float64]
    first_outcome_marginal: Dict[str, float]
    last_outcome_marginal: Dict[str, float]
    final_state: DensityOperator

    @property
    def mean_work(self) -> float:
        return float(np.sum(self.step_work))

    @property
    def mean_meas_heat(self) -> float:
        return float(np.sum(self.step_meas_heat))


def expected_stroke_energetics(
    p: EngineParams,
    stage: Stage,
    rho_SL_in: DensityOperator,
    basis: MeasurementBasis,
    settings: PropagationSettings = DEFAULT_SETTINGS,
    schedule: Optional[PulseSchedule] = None,
) -> StrokeExpectation:
    """
    Exact trajectory averages of δW_k and δQ_k^(meas).

    Both increments are linear in the conditional state, and the Born-weighted
    average of the conditional states is the nonselective iterate, so a
    single 4x4 recursion gives the ensemble means without sampling.
    """
    schedule = schedule or pulse_schedule(p, stage, settings)
    energies = _energy_operators(p, stage, schedule.times)
    projectors = basis.projectors()
    rho = rho_SL_in.matrix
    step_work = np.zeros(schedule.n)
    step_heat = np.zeros(schedule.n)
    first: Dict[str, float] = {}
    marginal: Dict[str, float] = {}

    for k, u in enumerate(schedule.propagators):
        before = expectation(energies[k], rho)
        evolved = u @ rho @ dagger(u)
        after_pulse = expectation(energies[k + 1], evolved)
        marginal = {label: expectation(proj, evolved) for label, proj in projectors.items()}
        if k == 0:
            first = marginal
        rho = sum(proj @ evolved @ proj for proj in projectors.values())
        step_work[k] = after_pulse - before
        step_heat[k] = expectation(energies[k + 1], rho) - after_pulse

    return StrokeExpectation(step_work, step_heat, first, marginal, DensityOperator.from_matrix(rho))


def last_outcome_marginal(
    p: EngineParams,
    stage: Stage,
    rho_SL_in: DensityOperator,
    basis: MeasurementBasis,
    outcome: str,
    settings: PropagationSettings = DEFAULT_SETTINGS,
) -> float:
    """Exact marginal probability p(ℓ_n) of the final outcome."""
    return expected_stroke_energetics(p, stage, rho_SL_in, basis, settings).last_outcome_marginal[outcome]


def no_jump_probability(
    p: EngineParams,
    stage: Stage,
    rho_SL_in: DensityOperator,
    basis: MeasurementBasis = MeasurementBasis.X,
    settings: PropagationSettings = DEFAULT_SETTINGS,
    schedule: Optional[PulseSchedule] = None,
) -> float:
    """
    Probability of a record without jumps, i.e. with all n outcomes equal.

    Sums the unnormalised projected recursion over each constant record.
    """
    schedule = schedule or pulse_schedule(p, stage, settings)
    total = 0.0
    for proj in basis.projectors().values():
        rho = rho_SL_in.matrix
        for u in schedule.propagators:
            rho = proj @ u @ rho @ dagger(u) @ proj
        total += float(np.real(np.trace(rho)))
    return total


def entropy_production(p_last: float, p_first: float = 1.0) -> float:
    """σ = ln(p(ℓ₁)/p(ℓ_n))."""
    if p_last <= 0:
        raise ValueError("Marginal probability of the last outcome must be positive")
    return math.log(p_first / p_last)


def trajectory_entropy_production(
    p: EngineParams,
    stage: Stage,
    record: TrajectoryRecord,
    rho_SL_in: DensityOperator,
    basis: MeasurementBasis,
    settings: PropagationSettings = DEFAULT_SETTINGS,
    ensemble: Optional[TrajectoryEnsemble] = None,
) -> float:
    """
    σ(ℓ_n) = ln(p(ℓ₁)/p(ℓ_n)) for the first and last outcomes of ``record``.

    Both marginals are exact unless an ensemble is passed, in which case
    their empirical frequencies are used. p(ℓ₁) is the first-outcome
    marginal, not 1.
    """
    first, last = record.outcomes[0], record.outcomes[-1]
    if ensemble is not None:
        return entropy_production(ensemble.outcome_frequency(last), ensemble.outcome_frequency(first, 0))
    exact = expected_stroke_energetics(p, stage, rho_SL_in, basis, settings)
    return entropy_production(exact.last_outcome_marginal[last], exact.first_outcome_marginal[first])
