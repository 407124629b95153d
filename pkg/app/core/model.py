"""
Engine model: parameters, the four-stroke timeline, every Hamiltonian of the
working medium (S) and lubricant (L), instantaneous eigenbases, Zeno
projectors, counter-diabatic terms and thermal states.

Basis convention: |0> is the excited state of H_cold = (ω/2)Z.
Stroke-local time ``s`` runs over [0, τ_stroke]; ``stage_at`` is the only
place where cycle time is mapped onto (stage, local time).
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field

from app.core.exceptions import StageError
from app.core.linalg import (
    I2,
    KET_MINUS,
    KET_PLUS,
    X,
    Y,
    Z,
    DensityOperator,
    OperatorMatrix,
    hermitian_eigendecomposition,
    projector,
    require_hermitian,
    tensor_product,
)


# Configure Logging
logger = logging.getLogger(__name__)

Outcome = Literal["+", "-"]

TIME_SLACK = 1e-12


class Stage(str, Enum):
    COMPRESSION = "compression"
    HOT_ISOCHORE = "hot"
    EXPANSION = "expansion"
    COLD_ISOCHORE = "cold"

    @property
    def is_work_stroke(self) -> bool:
        return self in (Stage.COMPRESSION, Stage.EXPANSION)


class DriveMode(str, Enum):
    BARE = "bare"
    STRONG_COUPLING = "strong_coupling"
    ZENO_MONITORED = "zeno"
    COUNTER_DIABATIC = "counter_diabatic"


@dataclass(frozen=True)
class StrokePhase:
    """A cycle stage plus, for work strokes only, the drive mode."""

    stage: Stage
    drive_mode: Optional[DriveMode] = None

    def __post_init__(self):
        if not self.stage.is_work_stroke and self.drive_mode is not None:
            raise StageError(f"Isochoric stage '{self.stage.value}' carries no drive mode")


class EngineParams(BaseModel):
    """
    Every scalar of the engine model.

    Defaults are the standard engine operating point (ω = ω_L = 1, Ω₀ = 3.01105,
    T_c = 0.5, T_h = 3, γ_h = γ_c = 0.5).
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    omega: float = Field(1.0, gt=0, description="Bare system frequency ω.")
    omega0: float = Field(3.01105, gt=0, description="Drive amplitude Ω₀.")
    omega_L: float = Field(1.0, ge=0, description="Lubricant frequency ω_L.")
    gamma_comp: float = Field(20.0, ge=0, description="S-L coupling Γ during compression.")
    gamma_exp: float = Field(20.0, ge=0, description="S-L coupling Γ during expansion.")
    gamma_h: float = Field(0.5, ge=0, description="Hot-bath dissipative rate.")
    gamma_c: float = Field(0.5, ge=0, description="Cold-bath dissipative rate.")
    T_h: float = Field(3.0, gt=0, description="Hot-bath temperature.")
    T_c: float = Field(0.5, gt=0, description="Cold-bath temperature.")
    tau_comp: float = Field(5.0, gt=0)
    tau_hot: float = Field(5.0, gt=0)
    tau_exp: float = Field(2.5, gt=0)
    tau_cold: float = Field(12.0, gt=0)
    n_meas: int = Field(100, ge=1, description="Measurements per work stroke.")
    n_traj: int = Field(50, ge=1, description="Trajectories per ensemble.")
    nu: float = Field(0.0, ge=0, description="Drive-cost constant ν.")
    beta_reset: float = Field(2.0, gt=0, description="Inverse temperature of the resetting bath.")
    master_seed: int = Field(0, ge=0, lt=2**64)
    lubricant_polarization: float = Field(
        1.0, ge=0, le=1, description="r in ρ_L = (I + r X)/2; 1 is |+><+|."
    )

    @computed_field
    @property
    def Omega(self) -> float:
        """Gap of H_hot, √(ω² + Ω₀²)."""
        return math.hypot(self.omega, self.omega0)

    @property
    def t1(self) -> float:
        return self.tau_comp

    @property
    def t2(self) -> float:
        return self.tau_comp + self.tau_hot

    @property
    def t3(self) -> float:
        return self.t2 + self.tau_exp

    @property
    def tau(self) -> float:
        """Cycle time."""
        return self.t3 + self.tau_cold

    @property
    def extraction_ok(self) -> bool:
        return self.omega / self.Omega > self.T_c / self.T_h

    def with_updates(self, **updates: Any) -> "EngineParams":
        """Validated copy with some fields replaced (``gamma`` sets both couplings)."""
        data = self.model_dump(exclude={"Omega"})
        if "gamma" in updates:
            g = updates.pop("gamma")
            data["gamma_comp"] = g
            data["gamma_exp"] = g
        data.update(updates)
        return EngineParams.model_validate(data)


# --- Timeline ---


def stroke_duration(p: EngineParams, stage: Stage) -> float:
    return {
        Stage.COMPRESSION: p.tau_comp,
        Stage.HOT_ISOCHORE: p.tau_hot,
        Stage.EXPANSION: p.tau_exp,
        Stage.COLD_ISOCHORE: p.tau_cold,
    }[stage]


def stage_at(p: EngineParams, t: float) -> Tuple[Stage, float]:
    """Maps cycle time t ∈ [0, τ) to (stage, stroke-local time)."""
    if t < 0 or t >= p.tau:
        raise StageError(f"Cycle time {t} outside [0, {p.tau})")
    if t < p.t1:
        return Stage.COMPRESSION, t
    if t < p.t2:
        return Stage.HOT_ISOCHORE, t - p.t1
    if t < p.t3:
        return Stage.EXPANSION, t - p.t2
    return Stage.COLD_ISOCHORE, t - p.t3


def _require_work_stroke(stage: Stage) -> None:
    if not stage.is_work_stroke:
        raise StageError(f"'{stage.value}' is not a work stroke")


def _check_local_time(p: EngineParams, stage: Stage, s: float) -> None:
    duration = stroke_duration(p, stage)
    if s < -TIME_SLACK or s > duration + TIME_SLACK:
        raise StageError(f"Local time {s} outside [0, {duration}] for {stage.value}")


def coupling(p: EngineParams, stage: Stage) -> float:
    _require_work_stroke(stage)
    return p.gamma_comp if stage is Stage.COMPRESSION else p.gamma_exp


# --- Drive protocol ---


def _drive_fraction(p: EngineParams, stage: Stage, s: float) -> Tuple[float, float]:
    """Fraction f of Ω₀ applied on X at local time s, and df/ds."""
    if stage is Stage.COMPRESSION:
        return s / p.tau_comp, 1.0 / p.tau_comp
    return (p.tau_exp - s) / p.tau_exp, -1.0 / p.tau_exp


def h_cold(p: EngineParams) -> OperatorMatrix:
    return 0.5 * p.omega * Z


def h_hot(p: EngineParams) -> OperatorMatrix:
    return 0.5 * p.omega * Z + 0.5 * p.omega0 * X


def h_stage(p: EngineParams, stage: Stage, s: float = 0.0) -> OperatorMatrix:
    """System Hamiltonian at local time s of a stage."""
    if stage is Stage.HOT_ISOCHORE:
        return h_hot(p)
    if stage is Stage.COLD_ISOCHORE:
        return h_cold(p)
    _check_local_time(p, stage, s)
    f, _ = _drive_fraction(p, stage, s)
    return 0.5 * p.omega * Z + 0.5 * p.omega0 * f * X


def h_stage_rate(p: EngineParams, stage: Stage, s: float = 0.0) -> OperatorMatrix:
    """dH_S/ds, constant on each stroke."""
    if not stage.is_work_stroke:
        return np.zeros((2, 2), dtype=complex)
    _, df = _drive_fraction(p, stage, s)
    return 0.5 * p.omega0 * df * X


def h_system(p: EngineParams, t: float) -> OperatorMatrix:
    """Full-cycle system Hamiltonian at cycle time t ∈ [0, τ)."""
    stage, s = stage_at(p, t)
    return h_stage(p, stage, s)


def gap(p: EngineParams, stage: Stage, s: float) -> float:
    """ε(s) = √(ω² + (Ω₀ f)²)."""
    _require_work_stroke(stage)
    f, _ = _drive_fraction(p, stage, s)
    return math.hypot(p.omega, p.omega0 * f)


def gap_rate(p: EngineParams, stage: Stage, s: float) -> float:
    _require_work_stroke(stage)
    f, df = _drive_fraction(p, stage, s)
    return (p.omega0**2) * f * df / gap(p, stage, s)


def mixing_angle(p: EngineParams, stage: Stage, s: float) -> float:
    """θ = arctan(Ω₀ f/ω) (ϑ on the expansion stroke)."""
    _require_work_stroke(stage)
    f, _ = _drive_fraction(p, stage, s)
    return math.atan(p.omega0 * f / p.omega)


def angle_rate(p: EngineParams, stage: Stage, s: float) -> float:
    """Analytic dθ/ds."""
    _require_work_stroke(stage)
    f, df = _drive_fraction(p, stage, s)
    a = p.omega0 / p.omega
    return a * df / (1.0 + (a * f) ** 2)


def angle_acceleration(p: EngineParams, stage: Stage, s: float) -> float:
    """Analytic d²θ/ds²."""
    _require_work_stroke(stage)
    f, df = _drive_fraction(p, stage, s)
    a = p.omega0 / p.omega
    return -2.0 * a**3 * f * df**2 / (1.0 + (a * f) ** 2) ** 2


@dataclass(frozen=True)
class InstantaneousBasis:
    angle: float
    gap: float
    ket0: np.ndarray
    ket1: np.ndarray

    @property
    def p0(self) -> OperatorMatrix:
        return projector(self.ket0)

    @property
    def p1(self) -> OperatorMatrix:
        return projector(self.ket1)


def instantaneous_basis(p: EngineParams, t: float, stage: Stage) -> InstantaneousBasis:
    """Eigenbasis of the work-stroke Hamiltonian at local time t; ket0 is the upper level."""
    _require_work_stroke(stage)
    _check_local_time(p, stage, t)
    theta = mixing_angle(p, stage, t)
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return InstantaneousBasis(
        angle=theta,
        gap=gap(p, stage, t),
        ket0=np.array([c, s], dtype=complex),
        ket1=np.array([s, -c], dtype=complex),
    )


def rotation_operator(p: EngineParams, t: float, stage: Stage) -> OperatorMatrix:
    """R(t) = cos θ Z + sin θ X (K(t) on expansion); equals 2 H_S / ε."""
    theta = mixing_angle(p, stage, t)
    return math.cos(theta) * Z + math.sin(theta) * X


def rotation_rate(p: EngineParams, t: float, stage: Stage) -> OperatorMatrix:
    theta = mixing_angle(p, stage, t)
    return angle_rate(p, stage, t) * (-math.sin(theta) * Z + math.cos(theta) * X)


def counter_diabatic(p: EngineParams, t: float, stage: Stage) -> OperatorMatrix:
    """A(t) = i(θ̇/2)(|0_t><1_t| − |1_t><0_t|)."""
    basis = instantaneous_basis(p, t, stage)
    rate = angle_rate(p, stage, t)
    swap = np.outer(basis.ket0, basis.ket1.conj()) - np.outer(basis.ket1, basis.ket0.conj())
    return 0.5j * rate * swap


def counter_diabatic_rate(p: EngineParams, t: float, stage: Stage) -> OperatorMatrix:
    """dA/dt. A is (θ̇/2)·Y in the computational basis, so this is (θ̈/2)·Y."""
    return 0.5 * angle_acceleration(p, stage, t) * Y


# --- Lubricant and joint operators ---


def lubricant_hamiltonian(p: EngineParams) -> OperatorMatrix:
    return 0.5 * p.omega_L * Z


def lubricant_state(p: EngineParams) -> DensityOperator:
    """ρ_L = (I + r X)/2; r = 1 is |+><+|."""
    return DensityOperator(0.5 * (I2 + p.lubricant_polarization * X))


def interaction_hamiltonian(
    p: EngineParams, t: float, stage: Stage, gamma: Optional[float] = None
) -> OperatorMatrix:
    """H_SL = Γ R(t) ⊗ X."""
    g = coupling(p, stage) if gamma is None else gamma
    return g * tensor_product(rotation_operator(p, t, stage), X)


def h_total(p: EngineParams, t: float, stage: Stage, gamma: Optional[float] = None) -> OperatorMatrix:
    """H_S ⊗ 1 + 1 ⊗ H_L + Γ R ⊗ X."""
    return (
        tensor_product(h_stage(p, stage, t), I2)
        + tensor_product(I2, lubricant_hamiltonian(p))
        + interaction_hamiltonian(p, t, stage, gamma)
    )


def h_effective(p: EngineParams, t: float, stage: Stage, gamma: Optional[float] = None) -> OperatorMatrix:
    """Γ R ⊗ X + (A + H_S) ⊗ 1."""
    cd = counter_diabatic(p, t, stage) + h_stage(p, stage, t)
    return interaction_hamiltonian(p, t, stage, gamma) + tensor_product(cd, I2)


def _sector_projector(outcome: Outcome) -> OperatorMatrix:
    if outcome == "+":
        return projector(KET_PLUS)
    if outcome == "-":
        return projector(KET_MINUS)
    raise ValueError(f"Unknown outcome '{outcome}'")


def zeno_hamiltonian(p: EngineParams, t: float, stage: Stage, outcome: Outcome) -> OperatorMatrix:
    """ℓΓ R ⊗ |ℓ><ℓ| + (A + H_S) ⊗ |ℓ><ℓ|."""
    sign = 1.0 if outcome == "+" else -1.0
    pl = _sector_projector(outcome)
    g = coupling(p, stage)
    system_block = counter_diabatic(p, t, stage) + h_stage(p, stage, t)
    return tensor_product(sign * g * rotation_operator(p, t, stage) + system_block, pl)


def zeno_projectors(p: EngineParams, t: float, stage: Stage) -> Tuple[OperatorMatrix, OperatorMatrix]:
    """Spectral projectors P± of R(t) ⊗ X."""
    basis = instantaneous_basis(p, t, stage)
    plus, minus = projector(KET_PLUS), projector(KET_MINUS)
    p_plus = tensor_product(basis.p0, plus) + tensor_product(basis.p1, minus)
    p_minus = tensor_product(basis.p0, minus) + tensor_product(basis.p1, plus)
    return p_plus, p_minus


def thermal_state(h: OperatorMatrix, T: float) -> DensityOperator:
    """Gibbs state e^{-h/T}/Z."""
    if T <= 0:
        raise ValueError(f"Temperature must be positive, got {T}")
    values, vectors = hermitian_eigendecomposition(require_hermitian(h))
    weights = np.exp(-(values - values.min()) / T)
    weights /= weights.sum()
    return DensityOperator.from_matrix((vectors * weights) @ vectors.conj().T)


def initial_joint_state(rho_S: DensityOperator, p: EngineParams) -> DensityOperator:
    """ρ_S ⊗ ρ_L at the start of a work stroke."""
    return rho_S.tensor(lubricant_state(p))
