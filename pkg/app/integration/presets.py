"""
Experiment presets: one list of panels per dataset.

Every preset has a ``full`` profile on dense grids and a
``desk`` profile on coarser grids (and smaller ensembles) that runs on a
laptop in minutes. Panels of the Zeno drive sample one stochastic trajectory
per grid point and stroke.
"""

import logging
from typing import Callable, Dict, List, Sequence

import numpy as np

from app.core.exceptions import ConfigError
from app.core.model import DriveMode, EngineParams, Stage
from app.core.zeno import MeasurementBasis
from app.integration.schemas import ExperimentConfig, SweepAxis, TiedParameter


# Configure Logging
logger = logging.getLogger(__name__)

# Operating points
COHERENCE_POINT = EngineParams(omega0=5.0, n_meas=100)
ENGINE_POINT = EngineParams()
MONITORED_POINT = EngineParams(tau_comp=9.0, tau_exp=4.5, n_meas=200, gamma_comp=20.0, gamma_exp=20.0, n_traj=50)
WEAK_BATH_POINT = EngineParams(
    gamma_h=0.005, gamma_c=0.005, tau_comp=5.0, tau_exp=2.5, gamma_comp=60.0, gamma_exp=60.0, n_meas=400
)

HALF_EXPANSION = TiedParameter(name="tau_exp", source="tau_comp", factor=0.5)


def grid(start: float, stop: float, step: float) -> List[float]:
    """Inclusive arithmetic grid, rounded so that CSV values read cleanly."""
    n = int(round((stop - start) / step))
    return [round(float(v), 10) for v in np.linspace(start, stop, n + 1)]


def axis(name: str, values: Sequence[float]) -> SweepAxis:
    return SweepAxis(name=name, values=list(values))


def _pick(profile: str, desk, full):
    return full if profile == "full" else desk


# --- Presets ---


def fig3(profile: str) -> List[ExperimentConfig]:
    taus = _pick(profile, grid(0.5, 10.0, 0.5), grid(0.5, 10.0, 0.05))
    return [
        ExperimentConfig(
            panel="fig3a_strong_coupling",
            params=COHERENCE_POINT,
            drive_mode=DriveMode.STRONG_COUPLING,
            evaluator="stroke",
            sweep=[axis("gamma", _pick(profile, [0, 10, 50], [0, 5, 10, 20, 50])), axis("tau_comp", taus)],
        ),
        ExperimentConfig(
            panel="fig3b_zeno",
            params=COHERENCE_POINT.with_updates(gamma=50.0),
            drive_mode=DriveMode.ZENO_MONITORED,
            evaluator="stroke",
            sweep=[axis("tau_comp", taus)],
        ),
    ]


def _cycle_taus(profile: str) -> List[float]:
    return _pick(profile, [5.0, 10.0, 20.0, 35.0, 50.0], grid(5.0, 50.0, 0.05))


def fig4(profile: str) -> List[ExperimentConfig]:
    taus = axis("tau_comp", _cycle_taus(profile))
    panels = [
        ExperimentConfig(panel="fig4_bare", params=ENGINE_POINT, sweep=[taus], ties=[HALF_EXPANSION]),
        ExperimentConfig(
            panel="fig4_strong_coupling",
            params=ENGINE_POINT,
            drive_mode=DriveMode.STRONG_COUPLING,
            sweep=[axis("gamma", _pick(profile, [10, 60], [10, 30, 60])), taus],
            ties=[HALF_EXPANSION],
        ),
    ]
    for gamma, n in _pick(profile, [(20, 100), (60, 400)], [(20, 100), (50, 200), (60, 400)]):
        panels.append(
            ExperimentConfig(
                panel=f"fig4_zeno_gamma{gamma}_n{n}",
                params=ENGINE_POINT.with_updates(gamma=float(gamma), n_meas=n),
                drive_mode=DriveMode.ZENO_MONITORED,
                sweep=[taus],
                ties=[HALF_EXPANSION],
            )
        )
    return panels


def fig5(profile: str) -> List[ExperimentConfig]:
    return [
        ExperimentConfig(
            panel="fig5_joint_work",
            params=ENGINE_POINT,
            drive_mode=DriveMode.STRONG_COUPLING,
            sweep=[axis("gamma", [10, 30, 60]), axis("tau_comp", _cycle_taus(profile))],
            ties=[HALF_EXPANSION],
        )
    ]


def fig6(profile: str) -> List[ExperimentConfig]:
    params = MONITORED_POINT.with_updates(n_traj=_pick(profile, 10, 50))
    return [
        ExperimentConfig(
            panel=f"fig6_{stage.value}",
            params=params,
            drive_mode=DriveMode.ZENO_MONITORED,
            evaluator="increments",
            stage=stage,
        )
        for stage in (Stage.COMPRESSION, Stage.EXPANSION)
    ]


def fig7(profile: str) -> List[ExperimentConfig]:
    """Pulse counts stay in the dense-monitoring regime Γ·δt ≤ 0.5, where heat and p_jump fall as 1/n."""
    return [
        ExperimentConfig(
            panel="fig7_ensemble",
            params=MONITORED_POINT,
            drive_mode=DriveMode.ZENO_MONITORED,
            evaluator="ensemble",
            sweep=[
                axis("tau_comp", _pick(profile, [5.0, 9.0, 10.0], grid(5.0, 10.0, 0.5))),
                axis("n_meas", _pick(profile, [400, 800, 1600], [400, 600, 800, 1200, 1600, 2400, 3200])),
            ],
            ties=[HALF_EXPANSION],
        )
    ]


def _coupling_sweep(profile: str, panel: str) -> ExperimentConfig:
    return ExperimentConfig(
        panel=panel,
        params=COHERENCE_POINT,
        drive_mode=DriveMode.STRONG_COUPLING,
        evaluator="stroke",
        sweep=[
            axis("tau_comp", [1.0, 2.0, 5.0, 10.0]),
            axis("gamma", _pick(profile, grid(1.0, 50.0, 1.0), grid(1.0, 50.0, 0.01))),
        ],
    )


def fig8(profile: str) -> List[ExperimentConfig]:
    return [_coupling_sweep(profile, "fig8_negativity")]


def fig9(profile: str) -> List[ExperimentConfig]:
    return [_coupling_sweep(profile, "fig9_decoupling_cost")]


def fig10(profile: str) -> List[ExperimentConfig]:
    sweep = [axis("tau_hot", _pick(profile, [300.0, 500.0, 800.0], grid(300.0, 800.0, 10.0)))]
    ties = [TiedParameter(name="tau_cold", source="tau_hot", factor=2.0)]
    return [
        ExperimentConfig(panel="fig10_bare", params=WEAK_BATH_POINT, sweep=sweep, ties=ties),
        ExperimentConfig(
            panel="fig10_zeno",
            params=WEAK_BATH_POINT,
            drive_mode=DriveMode.ZENO_MONITORED,
            sweep=sweep,
            ties=ties,
        ),
    ]


def fig11(profile: str) -> List[ExperimentConfig]:
    params = COHERENCE_POINT.with_updates(gamma=50.0)
    taus = [axis("tau_comp", _pick(profile, grid(0.5, 10.0, 0.5), grid(0.5, 10.0, 0.05)))]
    return [
        ExperimentConfig(
            panel=f"fig11_{basis.value}",
            params=params,
            drive_mode=DriveMode.ZENO_MONITORED,
            measurement_basis=basis,
            evaluator="stroke",
            sweep=taus,
        )
        for basis in (MeasurementBasis.COMPUTATIONAL, MeasurementBasis.X)
    ]


def bound(profile: str) -> List[ExperimentConfig]:
    gammas = _pick(profile, [20, 50, 100, 200], [10, 20, 50, 100, 200, 500, 1000])
    return [
        ExperimentConfig(
            panel="bound",
            params=COHERENCE_POINT.with_updates(tau_comp=5.0),
            evaluator="bound",
            sweep=[axis("gamma", gammas)],
        )
    ]


def thermalization(profile: str) -> List[ExperimentConfig]:
    sweep = _pick(profile, [], [axis("gamma_h", [0.005, 0.05, 0.5])])
    return [
        ExperimentConfig(
            panel="thermalization",
            params=ENGINE_POINT,
            evaluator="thermalization",
            sweep=sweep,
            ties=[TiedParameter(name="gamma_c", source="gamma_h")] if sweep else [],
        )
    ]


def drive_cost(profile: str) -> List[ExperimentConfig]:
    return [
        ExperimentConfig(
            panel="drive_cost",
            params=ENGINE_POINT.with_updates(tau_comp=9.0, tau_exp=4.5),
            drive_mode=DriveMode.STRONG_COUPLING,
            sweep=[
                axis("nu", [0.0, 0.001, 0.01]),
                axis("gamma", _pick(profile, [10, 20, 40, 60], [10, 20, 30, 40, 50, 60])),
            ],
        )
    ]


# Registry of Presets
PRESETS: Dict[str, Callable[[str], List[ExperimentConfig]]] = {
    "fig3": fig3,
    "fig4": fig4,
    "fig5": fig5,
    "fig6": fig6,
    "fig7": fig7,
    "fig8": fig8,
    "fig9": fig9,
    "fig10": fig10,
    "fig11": fig11,
    "bound": bound,
    "thermalization": thermalization,
    "drive_cost": drive_cost,
}

DESCRIPTIONS: Dict[str, str] = {
    "fig3": "Coherence after compression vs τ_comp: strong coupling (Γ sweep) and Zeno drive",
    "fig4": "Efficiency, power and work vs τ_comp: bare, strong coupling and Zeno (Γ, n) pairs",
    "fig5": "Joint-system work vs transitionless work for Γ ∈ {10, 30, 60}",
    "fig6": "Per-step δW and δQ(meas) of Zeno trajectories on both work strokes",
    "fig7": "Ensemble-averaged Zeno work and measurement heat vs n",
    "fig8": "Logarithmic negativity after compression vs Γ",
    "fig9": "Decoupling cost of the compression stroke vs Γ",
    "fig10": "Power vs cycle time under weak bath coupling, bare vs Zeno",
    "fig11": "Coherence vs τ_comp under computational-basis vs X-basis monitoring",
    "bound": "Strong-coupling propagator error against its analytic bound vs Γ",
    "thermalization": "Fitted vs analytic relaxation rates of both baths",
    "drive_cost": "Net power vs Γ for drive-cost constants ν ∈ {0, 0.001, 0.01}",
}


def get_preset(preset_id: str, profile: str = "desk") -> List[ExperimentConfig]:
    """
    Panels of a preset, tagged with the preset id and profile.

    Raises:
        ConfigError: If the preset or profile is unknown.
    """
    builder = PRESETS.get(preset_id)
    if builder is None:
        raise ConfigError(f"Unknown preset '{preset_id}'. Available: {', '.join(PRESETS)}")
    if profile not in ("desk", "full"):
        raise ConfigError(f"Unknown profile '{profile}' (expected 'desk' or 'full')")
    panels = builder(profile)
    return [panel.model_copy(update={"preset": preset_id, "profile": profile}) for panel in panels]
