"""
Thermodynamic bookkeeping: work and heat per stroke, ideal Otto references,
friction decomposition, the cost terms of lubricated operation and the
coherence/entanglement diagnostics.

Sign convention: energy flowing into the working medium is positive, so
extracted work is negative. Power and efficiency flip that sign exactly once,
in ``CycleLedger``.
"""

import logging
import math
from typing import Literal, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict
from scipy.integrate import quad, trapezoid
from scipy.stats import linregress

from app.core.exceptions import DimensionError
from app.core.linalg import (
    DensityOperator,
    OperatorMatrix,
    expectation,
    hermitian_eigendecomposition,
    norms,
    partial_transpose,
    partial_trace,
    trace_norm,
)
from app.core.model import (
    EngineParams,
    Stage,
    angle_rate,
    coupling,
    gap,
    gap_rate,
    h_cold,
    h_hot,
    h_stage_rate,
    instantaneous_basis,
    interaction_hamiltonian,
    lubricant_state,
    stroke_duration,
)
from app.core.propagation import bath_model
from app.core.zeno import MeasurementBasis


# Configure Logging
logger = logging.getLogger(__name__)

DriveCostNorm = Literal["trace", "frobenius"]


def stroke_work(
    h_i: OperatorMatrix, h_f: OperatorMatrix, rho_i: DensityOperator, rho_f: DensityOperator
) -> float:
    """ΔW = Tr[h_f ρ_f] − Tr[h_i ρ_i]; negative when work is extracted."""
    if not (h_i.shape == h_f.shape == rho_i.matrix.shape == rho_f.matrix.shape):
        raise DimensionError("Hamiltonians and states must share one dimension")
    return expectation(h_f, rho_f.matrix) - expectation(h_i, rho_i.matrix)


def isochore_heat(h: OperatorMatrix, rho_i: DensityOperator, rho_f: DensityOperator) -> float:
    """ΔQ = Tr[h (ρ_f − ρ_i)] at fixed Hamiltonian."""
    return expectation(h, rho_f.matrix - rho_i.matrix)


# --- Ideal Otto references ---


class IdealOtto(NamedTuple):
    W_comp: float
    W_exp: float
    W_tot: float
    Q_hot: float
    Q_cold: float
    eta_otto: float
    eta_carnot: float
    eta_ca: float
    extraction_ok: bool


def ideal_otto(p: EngineParams) -> IdealOtto:
    """Quasistatic Otto cycle with perfectly thermalizing isochores."""
    omega, big_omega = p.omega, p.Omega
    cold_pol = math.tanh(omega / (2.0 * p.T_c))
    hot_pol = math.tanh(big_omega / (2.0 * p.T_h))
    half_span = 0.5 * (big_omega - omega)
    q_hot = 0.5 * big_omega * (cold_pol - hot_pol)
    return IdealOtto(
        W_comp=-half_span * cold_pol,
        W_exp=half_span * hot_pol,
        W_tot=half_span * (hot_pol - cold_pol),
        Q_hot=q_hot,
        Q_cold=-(omega / big_omega) * q_hot,
        eta_otto=1.0 - omega / big_omega,
        eta_carnot=1.0 - p.T_c / p.T_h,
        eta_ca=1.0 - math.sqrt(p.T_c / p.T_h),
        extraction_ok=p.extraction_ok,
    )


# --- Friction ---


class FrictionParts(NamedTuple):
    coherent_part: float
    population_part: float

    @property
    def total(self) -> float:
        return self.coherent_part + self.population_part


def _reduced(m: OperatorMatrix) -> OperatorMatrix:
    return partial_trace(m, "first") if m.shape == (4, 4) else m


def friction_work(
    p: EngineParams,
    stage: Stage,
    times: Sequence[float],
    rho_path: Sequence[OperatorMatrix],
) -> FrictionParts:
    """
    Splits ∫Tr[ρ_S Ḣ_S]dt into its population and coherence contributions
    in the instantaneous eigenbasis:

        Tr[ρḢ] = (ε̇/2)(ρ₀₀ − ρ₁₁) − ε θ̇ Re ρ₀₁

    Joint (4x4) states are reduced to the working medium first. The
    integrals use the trapezoid rule on the sampling grid.
    """
    t = np.asarray(times, dtype=float)
    if len(t) != len(rho_path) or len(t) < 2:
        raise ValueError("Sampling grid and state path are inconsistent")
    if np.any(np.diff(t) <= 0):
        raise ValueError("Sampling times must increase strictly")

    population = np.zeros(len(t))
    coherent = np.zeros(len(t))
    for k, (s, m) in enumerate(zip(t, rho_path)):
        rho = _reduced(m)
        basis = instantaneous_basis(p, s, stage)
        rho00 = np.real(basis.ket0.conj() @ rho @ basis.ket0)
        rho11 = np.real(basis.ket1.conj() @ rho @ basis.ket1)
        rho01 = basis.ket0.conj() @ rho @ basis.ket1
        population[k] = 0.5 * gap_rate(p, stage, s) * (rho00 - rho11)
        coherent[k] = -gap(p, stage, s) * angle_rate(p, stage, s) * np.real(rho01)

    return FrictionParts(float(trapezoid(coherent, t)), float(trapezoid(population, t)))


def work_integral(
    p: EngineParams, stage: Stage, times: Sequence[float], rho_path: Sequence[OperatorMatrix]
) -> float:
    """∫Tr[ρ_S Ḣ_S]dt by the trapezoid rule (first-law check on unitary strokes)."""
    hdot = h_stage_rate(p, stage)
    values = [expectation(hdot, _reduced(m)) for m in rho_path]
    return float(trapezoid(values, np.asarray(times, dtype=float)))


# --- Costs of lubrication ---


def joint_energy_change(
    h_i: OperatorMatrix, h_f: OperatorMatrix, rho_i: DensityOperator, rho_f: DensityOperator
) -> float:
    """One stroke's contribution ⟨H_tot(t_f)⟩_{ρ_SL(t_f)} − ⟨H_tot(t_i)⟩_{ρ_SL(t_i)}."""
    return stroke_work(h_i, h_f, rho_i, rho_f)


def joint_work_strong_coupling(
    endpoints: Sequence[Tuple[OperatorMatrix, OperatorMatrix, DensityOperator, DensityOperator]],
) -> float:
    """
    Joint work over the strong-coupling strokes.

    Args:
        endpoints: One (H_tot(t_i), H_tot(t_f), ρ_SL(t_i), ρ_SL(t_f)) tuple per work stroke.

    Returns:
        float: Sum of the per-stroke joint energy changes.
    """
    return float(sum(joint_energy_change(*stroke) for stroke in endpoints))


def decoupling_cost(
    p: EngineParams,
    stage: Stage,
    rho_SL_final: DensityOperator,
    rho_S_initial: DensityOperator,
    rho_L_initial: Optional[DensityOperator] = None,
) -> float:
    """Tr[H_SL(t_f) ρ_SL(t_f)] − Tr[H_SL(t_i) ρ_S ⊗ ρ_L]."""
    rho_L = rho_L_initial or lubricant_state(p)
    duration = stroke_duration(p, stage)
    final = expectation(interaction_hamiltonian(p, duration, stage), rho_SL_final.matrix)
    initial = expectation(interaction_hamiltonian(p, 0.0, stage), rho_S_initial.tensor(rho_L).matrix)
    return final - initial


def _shannon_entropy(probs: Sequence[float]) -> float:
    return float(-sum(q * math.log(q) for q in probs if q > 0))


def measurement_energy_cost(
    rho_before: DensityOperator,
    h: OperatorMatrix,
    basis: MeasurementBasis,
    beta_reset: float,
) -> Tuple[float, float]:
    """
    Energetic cost of one projective lubricant measurement.

    Returns:
        Tuple[float, float]: (heat_part, reset_part) with heat_part = Tr[h(ρ' − ρ)]
        for the nonselective update ρ' and reset_part = H({p_ℓ})/β.
    """
    projectors = basis.projectors().values()
    probs = [max(expectation(proj, rho_before.matrix), 0.0) for proj in projectors]
    post = sum(proj @ rho_before.matrix @ proj for proj in projectors)
    heat_part = expectation(h, post - rho_before.matrix)
    return heat_part, _shannon_entropy(probs) / beta_reset


def drive_cost(p: EngineParams, stage: Stage, norm: DriveCostNorm = "trace") -> float:
    """
    C_drive = ν ∫‖H_SL‖dt over the stroke.

    ‖Γ R ⊗ X‖ is 4Γ in the trace norm and 2Γ in the Frobenius norm.
    """
    per_time = {"trace": 4.0, "frobenius": 2.0}[norm] * coupling(p, stage)
    return p.nu * per_time * stroke_duration(p, stage)


def drive_cost_quadrature(p: EngineParams, stage: Stage, norm: DriveCostNorm = "trace") -> float:
    """Same functional integrated numerically along the stroke."""
    index = 0 if norm == "trace" else 2

    def integrand(s: float) -> float:
        return norms(interaction_hamiltonian(p, s, stage))[index]

    value, _ = quad(integrand, 0.0, stroke_duration(p, stage), epsabs=1e-12, epsrel=1e-12)
    return p.nu * value


def net_power(p: EngineParams, power: float, norm: DriveCostNorm = "trace") -> float:
    """P_net = P_tot − (C_comp + C_exp)/τ."""
    return power - (drive_cost(p, Stage.COMPRESSION, norm) + drive_cost(p, Stage.EXPANSION, norm)) / p.tau


# --- Thermalization ---


def thermalization_time(p: EngineParams, which_bath: Literal["hot", "cold"]) -> Tuple[float, float]:
    """(λ_gap, τ_estimate) with λ_gap = γ(2n̄+1)/2 and τ ≈ 2/(γ(2n̄+1))."""
    rate = bath_model(which_bath, p).relaxation_rate
    if rate == 0:
        return 0.0, math.inf
    return 0.5 * rate, 2.0 / rate


class DecayFit(NamedTuple):
    rate: float
    prefactor: float
    r_squared: float


def fit_decay_rate(times: npt.ArrayLike, distances: npt.ArrayLike) -> DecayFit:
    """Least-squares fit of distances ≈ C e^{−λ t} on a log scale."""
    t = np.asarray(times, dtype=float)
    d = np.asarray(distances, dtype=float)
    mask = d > 1e-14
    fit = linregress(t[mask], np.log(d[mask]))
    return DecayFit(rate=-fit.slope, prefactor=math.exp(fit.intercept), r_squared=fit.rvalue**2)


# --- Diagnostics ---


def coherence_l1(rho_S: DensityOperator, h_ref: OperatorMatrix) -> float:
    """C_ℓ1 = 2|⟨0_h|ρ|1_h⟩| in the eigenbasis of ``h_ref``."""
    values, vectors = hermitian_eigendecomposition(h_ref)
    if abs(values[1] - values[0]) < 1e-12:
        raise ValueError("Reference Hamiltonian is degenerate")
    return float(2.0 * abs(vectors[:, 1].conj() @ rho_S.matrix @ vectors[:, 0]))


def log_negativity(rho_SL: DensityOperator) -> float:
    """E_N = log₂‖ρ^{T_L}‖₁."""
    return max(0.0, math.log2(trace_norm(partial_transpose(rho_SL.matrix, "second"))))


# --- Cycle ledger ---


class CycleLedger(BaseModel):
    """Per-cycle thermodynamic record; every field is a CSV column."""

    model_config = ConfigDict(extra="forbid")

    W_comp: float
    W_exp: float
    W_tot: float
    Q_hot: float
    Q_cold: float
    Q_tot: float
    delta_U: float
    power: float
    efficiency: float
    eta_otto: float
    eta_carnot: float
    eta_ca: float
    W_ideal: float
    extraction_ok: bool
    friction_comp: float
    friction_exp: float
    W_joint_sc: float
    W_zeno: float = 0.0
    meas_heat: float = 0.0
    decoupling_cost: float = 0.0
    meas_energy_cost: float = 0.0
    entropy_production: float = 0.0
    drive_cost_per_cycle: float = 0.0
    net_power: float
    tau_therm_hot: float
    tau_therm_cold: float
    coherence_comp: float
    coherence_exp: float
    negativity_comp: float = 0.0
    jump_count: int = 0
    cycle_closure: float = 0.0


def cycle_heat_and_work(
    p: EngineParams,
    rho_0: DensityOperator,
    rho_1: DensityOperator,
    rho_2: DensityOperator,
    rho_3: DensityOperator,
    rho_4: DensityOperator,
) -> dict:
    """Reduced-system work and bath heat from the five stroke-boundary states."""
    hc, hh = h_cold(p), h_hot(p)
    w_comp = stroke_work(hc, hh, rho_0, rho_1)
    q_hot = isochore_heat(hh, rho_1, rho_2)
    w_exp = stroke_work(hh, hc, rho_2, rho_3)
    q_cold = isochore_heat(hc, rho_3, rho_4)
    w_tot = w_comp + w_exp
    power = -w_tot / p.tau
    return {
        "W_comp": w_comp,
        "W_exp": w_exp,
        "W_tot": w_tot,
        "Q_hot": q_hot,
        "Q_cold": q_cold,
        "Q_tot": q_hot + q_cold,
        "delta_U": isochore_heat(hc, rho_0, rho_4),
        "power": power,
        "efficiency": -w_tot / q_hot if q_hot > 0 else math.nan,
    }
