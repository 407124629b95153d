from typing import Any, Dict, List, Literal, Optional

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.core.config import settings
from app.core.engine import EngineOptions
from app.core.model import DriveMode, EngineParams, Stage
from app.core.propagation import PropagationSettings
from app.core.zeno import MeasurementBasis


EvaluatorKind = Literal["cycle", "stroke", "ensemble", "increments", "bound", "thermalization"]

# Names accepted by sweeps and ties: every model field plus the shared coupling
SWEEPABLE = frozenset(EngineParams.model_fields) | {"gamma"}


def _check_parameter_name(name: str) -> str:
    if name not in SWEEPABLE:
        raise ValueError(f"'{name}' is not an engine parameter")
    return name


class SweepAxis(BaseModel):
    """One swept parameter and its grid."""

    model_config = ConfigDict(extra="forbid")

    name: str = Field(..., description="EngineParams field, or 'gamma' for both couplings.")
    values: List[float] = Field(..., min_length=1)

    @field_validator("name")
    def validate_name(cls, v: str) -> str:
        return _check_parameter_name(v)


class TiedParameter(BaseModel):
    """Keeps ``name = factor * source`` at every sweep point (e.g. τ_exp = τ_comp/2)."""

    model_config = ConfigDict(extra="forbid")

    name: str
    source: str
    factor: float = 1.0

    @field_validator("name", "source")
    def validate_names(cls, v: str) -> str:
        return _check_parameter_name(v)


class ExperimentConfig(BaseModel):
    """
    Schema of one experiment panel: base parameters, a sweep and what to
    evaluate at every sweep point. Presets are lists of these.
    """

    model_config = ConfigDict(extra="forbid")

    panel: str = Field("sweep", description="Panel name, used as the CSV file name.")
    preset: Optional[str] = Field(None, description="Preset whose panels this config overrides.")
    profile: Literal["desk", "full"] = Field(default_factory=lambda: settings.DEFAULT_PROFILE)
    params: EngineParams = Field(default_factory=EngineParams)
    sweep: List[SweepAxis] = Field(
        default_factory=list, description="Axes combined as a Cartesian product, first axis outermost."
    )
    ties: List[TiedParameter] = Field(default_factory=list)
    drive_mode: DriveMode = DriveMode.BARE
    measurement_basis: MeasurementBasis = MeasurementBasis.X
    stage: Stage = Field(Stage.COMPRESSION, description="Work stroke for stroke-level evaluators.")
    evaluator: EvaluatorKind = "cycle"
    output_dir: str = Field(default_factory=lambda: settings.OUTPUT_DIR)
    parallelism: int = Field(default_factory=lambda: settings.ZENO_OTTO_WORKERS, ge=1)
    propagation: PropagationSettings = Field(default_factory=PropagationSettings)
    options: EngineOptions = Field(default_factory=EngineOptions)

    @field_validator("stage")
    def validate_stage(cls, v: Stage) -> Stage:
        """Only work strokes can be evaluated on their own."""
        if not v.is_work_stroke:
            raise ValueError("stage must be 'compression' or 'expansion'")
        return v

    @model_validator(mode="after")
    def validate_sweep(self) -> "ExperimentConfig":
        names = [axis.name for axis in self.sweep]
        if len(set(names)) != len(names):
            raise ValueError("sweep axes must be distinct")
        tied = {tie.name for tie in self.ties}
        if tied & set(names):
            raise ValueError(f"parameters {sorted(tied & set(names))} are both swept and tied")
        return self

    def manifest_entry(self) -> Dict[str, Any]:
        """Resolved config as JSON-ready data that validates back into the same config."""
        return self.model_dump(
            mode="json", exclude={"params": {"Omega"}, "output_dir": True, "parallelism": True}
        )


class ResultTable(BaseModel):
    """One DataFrame per panel plus the manifest that reproduces them."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    run_id: str
    panels: Dict[str, pd.DataFrame]
    manifest: Dict[str, Any]
