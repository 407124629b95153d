"""
Time evolution of the engine.

* Work strokes: time-ordered exponentials as products of midpoint-rule
  substep exponentials, exactly unitary by construction.
* Isochores: classical RK4 integration of the bath Lindbladian at a fixed step.
* The adiabatic-elimination error bound for the strong-coupling limit.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Literal, Optional, Tuple

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field

from app.core.config import settings as app_settings
from app.core.exceptions import GridResolutionError, NumericalInvariantError
from app.core.linalg import (
    I2,
    TRACE_TOL,
    DensityOperator,
    OperatorMatrix,
    dagger,
    hermitian_eigendecomposition,
    hermitian_exponential,
    operator_norm,
    tensor_product,
    unitarity_error,
)
from app.core.model import (
    EngineParams,
    Stage,
    counter_diabatic,
    counter_diabatic_rate,
    coupling,
    h_cold,
    h_effective,
    h_hot,
    h_stage,
    h_stage_rate,
    h_total,
    lubricant_hamiltonian,
    stroke_duration,
)


# Configure Logging
logger = logging.getLogger(__name__)

Bath = Literal["hot", "cold"]
HamiltonianFn = Callable[[float], OperatorMatrix]

UNITARITY_TOL = 1e-9


class PropagationSettings(BaseModel):
    """Integrator resolution."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    substeps_per_unit_time: int = Field(200, gt=0)
    lindblad_step: float = Field(1e-3, gt=0)
    grid_points_for_suprema: int = Field(2000, gt=1)
    steps_per_coupling: int = Field(default_factory=lambda: app_settings.STEPS_PER_COUPLING, gt=0)


DEFAULT_SETTINGS = PropagationSettings()


def substep_count(duration: float, settings: PropagationSettings, gamma: float = 0.0) -> int:
    """Number of midpoint substeps over ``duration``; lubricated strokes resolve Γ as well."""
    if duration <= 0:
        return 0
    rate = max(settings.substeps_per_unit_time, math.ceil(settings.steps_per_coupling * gamma))
    return max(1, math.ceil(duration * rate - 1e-9))


def _substep_unitaries(
    h: HamiltonianFn, t_i: float, t_f: float, n: int
) -> Tuple[npt.NDArray[np.float64], List[OperatorMatrix]]:
    times = np.linspace(t_i, t_f, n + 1)
    delta = (t_f - t_i) / n
    steps = [hermitian_exponential(h(0.5 * (times[k] + times[k + 1])), delta) for k in range(n)]
    return times, steps


def propagate_unitary(
    h: HamiltonianFn,
    t_i: float,
    t_f: float,
    settings: PropagationSettings = DEFAULT_SETTINGS,
    gamma: float = 0.0,
    n_steps: Optional[int] = None,
) -> OperatorMatrix:
    """
    Time-ordered propagator U(t_f, t_i) = Π_k exp(−i H(t_k + δ/2) δ).

    Args:
        h (HamiltonianFn): Hamiltonian as a function of (stroke-local) time.
        t_i (float): Start time.
        t_f (float): End time, t_f ≥ t_i.
        settings (PropagationSettings): Substep resolution.
        gamma (float): Coupling scale used to refine the substep count.
        n_steps (Optional[int]): Explicit substep count, overriding the settings.

    Returns:
        OperatorMatrix: The unitary propagator.

    Raises:
        NonHermitianError: If a sampled H(t) is not Hermitian.
        NumericalInvariantError: If the product drifts from unitarity.
    """
    if t_f < t_i:
        raise ValueError(f"t_f ({t_f}) must not precede t_i ({t_i})")
    dim = h(t_i).shape[0]
    if t_f == t_i:
        return np.eye(dim, dtype=complex)

    n = n_steps or substep_count(t_f - t_i, settings, gamma)
    _, steps = _substep_unitaries(h, t_i, t_f, n)
    u = np.eye(dim, dtype=complex)
    for step in steps:
        u = step @ u

    err = unitarity_error(u)
    if err > UNITARITY_TOL:
        raise NumericalInvariantError(f"Propagator lost unitarity (err={err:.3e})")
    return u


def evolve_path(
    h: HamiltonianFn,
    rho: DensityOperator,
    t_i: float,
    t_f: float,
    settings: PropagationSettings = DEFAULT_SETTINGS,
    gamma: float = 0.0,
) -> Tuple[npt.NDArray[np.float64], List[OperatorMatrix]]:
    """Evolves ``rho`` and returns the state at every substep boundary (endpoints included)."""
    if t_f == t_i:
        return np.array([t_i]), [rho.matrix]
    n = substep_count(t_f - t_i, settings, gamma)
    times, steps = _substep_unitaries(h, t_i, t_f, n)
    states = [rho.matrix]
    current = rho.matrix
    for step in steps:
        current = step @ current @ dagger(step)
        states.append(current)
    return times, states


def conjugate(u: OperatorMatrix, rho: DensityOperator) -> DensityOperator:
    return DensityOperator.from_matrix(u @ rho.matrix @ dagger(u))


def propagate_effective(
    p: EngineParams,
    stage: Stage,
    rho_SL: DensityOperator,
    settings: PropagationSettings = DEFAULT_SETTINGS,
) -> DensityOperator:
    """Evolves the joint state under h_effective over the whole work stroke."""
    u = propagate_unitary(
        lambda s: h_effective(p, s, stage),
        0.0,
        stroke_duration(p, stage),
        settings,
        gamma=coupling(p, stage),
    )
    return conjugate(u, rho_SL)


# --- Isochores ---


def bose_occupation(frequency: float, T: float) -> float:
    return 1.0 / math.expm1(frequency / T)


@dataclass(frozen=True)
class BathModel:
    """Stroke Hamiltonian and ladder operators built in its eigenbasis."""

    hamiltonian: OperatorMatrix
    sigma_plus: OperatorMatrix
    sigma_minus: OperatorMatrix
    gamma: float
    n_bar: float
    temperature: float

    @property
    def relaxation_rate(self) -> float:
        """Population relaxation rate γ(2n̄+1)."""
        return self.gamma * (2.0 * self.n_bar + 1.0)


def bath_model(which_bath: Bath, p: EngineParams) -> BathModel:
    if which_bath == "hot":
        h, gamma, T, freq = h_hot(p), p.gamma_h, p.T_h, p.Omega
    elif which_bath == "cold":
        h, gamma, T, freq = h_cold(p), p.gamma_c, p.T_c, p.omega
    else:
        raise ValueError(f"Unknown bath '{which_bath}'")
    _, vectors = hermitian_eigendecomposition(h)
    ground, excited = vectors[:, 0], vectors[:, 1]
    sigma_plus = np.outer(excited, ground.conj())
    return BathModel(
        hamiltonian=h,
        sigma_plus=sigma_plus,
        sigma_minus=dagger(sigma_plus),
        gamma=gamma,
        n_bar=bose_occupation(freq, T),
        temperature=T,
    )


def _dissipator_superoperator(bath: BathModel) -> OperatorMatrix:
    """Row-major vectorised dissipator, using vec(A ρ B) = (A ⊗ Bᵀ) vec(ρ)."""
    superop = np.zeros((4, 4), dtype=complex)
    jumps = [
        (bath.gamma * bath.n_bar, bath.sigma_plus),
        (bath.gamma * (bath.n_bar + 1.0), bath.sigma_minus),
    ]
    for rate, c in jumps:
        cdc = dagger(c) @ c
        superop += rate * (
            np.kron(c, c.conj()) - 0.5 * np.kron(cdc, I2) - 0.5 * np.kron(I2, cdc.T)
        )
    return superop


def _rk4_map(generator: OperatorMatrix, step: float) -> OperatorMatrix:
    """One classical RK4 step of d/dt x = L x, as a matrix."""
    hl = step * generator
    hl2 = hl @ hl
    hl3 = hl2 @ hl
    return np.eye(generator.shape[0]) + hl + hl2 / 2.0 + hl3 / 6.0 + hl3 @ hl / 24.0


def _lindblad_steps(duration: float, settings: PropagationSettings) -> Tuple[int, float]:
    n = max(1, math.ceil(duration / settings.lindblad_step - 1e-9))
    return n, duration / n


def _check_state(m: OperatorMatrix, where: str) -> DensityOperator:
    """Rejects drift beyond TRACE_TOL, then removes the accumulated rounding."""
    trace = np.trace(m)
    trace_err = abs(trace - 1.0)
    if trace_err > TRACE_TOL:
        raise NumericalInvariantError(f"Trace drifted by {trace_err:.3e} after {where}")
    return DensityOperator.from_matrix(m / trace.real)


def propagate_lindblad(
    which_bath: Bath,
    p: EngineParams,
    rho: DensityOperator,
    duration: float,
    settings: PropagationSettings = DEFAULT_SETTINGS,
) -> DensityOperator:
    """
    Thermalization stroke: RK4 integration of the bath dissipator for the
    configured (finite) duration.
    """
    if duration < 0:
        raise ValueError("Duration must be non-negative")
    if duration == 0:
        return rho
    bath = bath_model(which_bath, p)
    n, step = _lindblad_steps(duration, settings)
    step_map = _rk4_map(_dissipator_superoperator(bath), step)
    vec = np.linalg.matrix_power(step_map, n) @ rho.matrix.reshape(4)
    return _check_state(vec.reshape(2, 2), f"{which_bath} isochore")


def lindblad_path(
    which_bath: Bath,
    p: EngineParams,
    rho: DensityOperator,
    duration: float,
    settings: PropagationSettings = DEFAULT_SETTINGS,
    record_every: int = 1,
) -> Tuple[npt.NDArray[np.float64], List[OperatorMatrix]]:
    """Same integration as ``propagate_lindblad`` with the state recorded every few steps."""
    bath = bath_model(which_bath, p)
    n, step = _lindblad_steps(duration, settings)
    step_map = _rk4_map(_dissipator_superoperator(bath), step)
    block = np.linalg.matrix_power(step_map, record_every)
    vec = rho.matrix.reshape(4)
    times, states = [0.0], [rho.matrix]
    done = 0
    while done < n:
        stride = min(record_every, n - done)
        vec = (block if stride == record_every else np.linalg.matrix_power(step_map, stride)) @ vec
        done += stride
        times.append(done * step)
        states.append(vec.reshape(2, 2))
    return np.array(times), states


# --- Strong-coupling error bound ---


@dataclass(frozen=True)
class BoundReport:
    gamma: float
    actual_error: float
    bound_value: float
    eta: float
    eta_prime: float
    m: int
    sup_a: float
    sup_g: float
    sup_a_dot: float
    sup_g_dot: float

    @property
    def holds(self) -> bool:
        return self.actual_error <= self.bound_value


def _suprema(p: EngineParams, stage: Stage, points: int) -> npt.NDArray[np.float64]:
    duration = stroke_duration(p, stage)
    h_l = lubricant_hamiltonian(p)
    sups = np.zeros(4)
    for s in np.linspace(0.0, duration, points):
        g = tensor_product(h_stage(p, stage, s), I2) + tensor_product(I2, h_l)
        values = (
            operator_norm(counter_diabatic(p, s, stage)),
            operator_norm(g),
            operator_norm(counter_diabatic_rate(p, s, stage)),
            operator_norm(h_stage_rate(p, stage, s)),
        )
        sups = np.maximum(sups, values)
    return sups


def adiabatic_elimination_bound(
    p: EngineParams,
    stage: Stage,
    gamma: float,
    settings: PropagationSettings = DEFAULT_SETTINGS,
) -> BoundReport:
    """
    Evaluates the strong-coupling adiabatic-elimination bound on one work stroke
    and compares it with the actual distance between the exact and effective
    propagators.

    For the qubit model H₀(t) = R(t) ⊗ X has m = 2 spectral projectors with
    eigenvalues ±1, so η = 2 and η' = 0; G(t) = H_S(t) ⊗ 1 + 1 ⊗ H_L.

    Raises:
        GridResolutionError: If a supremum moves by more than 1% when the grid doubles.
        NumericalInvariantError: If the actual error exceeds the bound.
    """
    if gamma <= 0:
        raise ValueError("Coupling must be positive for the bound")
    coarse = _suprema(p, stage, settings.grid_points_for_suprema)
    fine = _suprema(p, stage, 2 * settings.grid_points_for_suprema)
    drift = np.abs(fine - coarse) / np.maximum(np.abs(fine), 1e-300)
    if np.any(drift > 0.01):
        raise GridResolutionError(f"Suprema not resolved on the grid (relative drift {drift.max():.3e})")
    sup_a, sup_g, sup_a_dot, sup_g_dot = (float(v) for v in fine)

    m, eta, eta_prime = 2, 2.0, 0.0
    tau = stroke_duration(p, stage)
    prefactor = math.sqrt(m) / (gamma * eta) * (1.0 + tau * sup_a + 2.0 * sup_g)
    bracket = (2.0 + eta_prime * tau / eta) * (sup_a + sup_g) + tau * (
        sup_a_dot + sup_g_dot + 2.0 * sup_a * sup_g
    )
    bound_value = prefactor * bracket

    exact = propagate_unitary(lambda s: h_total(p, s, stage, gamma), 0.0, tau, settings, gamma=gamma)
    effective = propagate_unitary(lambda s: h_effective(p, s, stage, gamma), 0.0, tau, settings, gamma=gamma)
    actual_error = operator_norm(exact - effective)

    report = BoundReport(
        gamma=gamma,
        actual_error=actual_error,
        bound_value=bound_value,
        eta=eta,
        eta_prime=eta_prime,
        m=m,
        sup_a=sup_a,
        sup_g=sup_g,
        sup_a_dot=sup_a_dot,
        sup_g_dot=sup_g_dot,
    )
    logger.debug(f"Bound at Γ={gamma}: actual={actual_error:.3e}, bound={bound_value:.3e}")
    if not report.holds:
        raise NumericalInvariantError(
            f"Propagator error {actual_error:.3e} exceeds the bound {bound_value:.3e} at Γ={gamma}"
        )
    return report
