import itertools
import os
from typing import Any, Callable, Dict, List, Optional, Tuple

from pydantic import ValidationError

from app.core.batch import process_sweep_core
from app.core.config import logger, settings
from app.core.exceptions import ConfigError
from app.core.formatter import ResultFormatter, build_manifest
from app.core.model import EngineParams
from app.core.validator import ExperimentConfigValidator
from app.integration.evaluators import SweepPoint, evaluate_point
from app.integration.presets import get_preset
from app.integration.schemas import ExperimentConfig, ResultTable
from app.utils import sanitize_filename


# Sections of a config that may override the panels of a preset
OVERRIDABLE = ("params", "propagation", "options", "drive_mode", "measurement_basis")


def _param_value(p: EngineParams, name: str) -> float:
    return p.gamma_comp if name == "gamma" else getattr(p, name)


def build_points(cfg: ExperimentConfig) -> Tuple[List[SweepPoint], List[Dict[str, float]]]:
    """
    Resolves every sweep point of a panel (Cartesian product, first axis outermost).

    Raises:
        ConfigError: If a sweep point yields invalid engine parameters.
    """
    names = [a.name for a in cfg.sweep]
    points, coordinates = [], []
    for index, combo in enumerate(itertools.product(*[a.values for a in cfg.sweep])):
        try:
            params = cfg.params.with_updates(**dict(zip(names, combo)))
            for tie in cfg.ties:
                value = tie.factor * _param_value(params, tie.source)
                params = params.with_updates(**{tie.name: value})
        except ValidationError as e:
            raise ConfigError(f"Panel '{cfg.panel}', point {index}: {e}") from e

        coords = {name: _param_value(params, name) for name in names}
        coords.update({tie.name: _param_value(params, tie.name) for tie in cfg.ties})
        coordinates.append(coords)
        points.append(
            SweepPoint(
                index=index,
                coordinates=coords,
                params=params,
                drive_mode=cfg.drive_mode,
                basis=cfg.measurement_basis,
                stage=cfg.stage,
                settings=cfg.propagation,
                options=cfg.options,
            )
        )
    return points, coordinates


def apply_overrides(panels: List[ExperimentConfig], cfg: ExperimentConfig) -> List[ExperimentConfig]:
    """Applies the sections explicitly set in ``cfg`` on top of every preset panel."""
    explicit = [name for name in OVERRIDABLE if name in cfg.model_fields_set]
    if not explicit:
        return panels
    result = []
    for panel in panels:
        update: Dict[str, Any] = {}
        for name in explicit:
            if name == "params":
                fields = {k: getattr(cfg.params, k) for k in cfg.params.model_fields_set}
                update["params"] = panel.params.with_updates(**fields)
                logger.warning(f"Preset '{cfg.preset}' panel '{panel.panel}': params overridden {fields}")
            else:
                update[name] = getattr(cfg, name)
                logger.warning(f"Preset '{cfg.preset}' panel '{panel.panel}': '{name}' overridden")
        result.append(panel.model_copy(update=update))
    return result


def _with_seed(panels: List[ExperimentConfig], seed: Optional[int]) -> List[ExperimentConfig]:
    if seed is None:
        return panels
    logger.info(f"Seed override: master_seed = {seed}")
    try:
        return [p.model_copy(update={"params": p.params.with_updates(master_seed=seed)}) for p in panels]
    except ValidationError as e:
        raise ConfigError(f"Invalid seed {seed}: {e}") from e


def plan(panels: List[ExperimentConfig]) -> int:
    """Resolves every sweep point without running anything; returns the point count."""
    names = [p.panel for p in panels]
    if len(set(names)) != len(names):
        raise ConfigError(f"Panel names must be unique, got {names}")
    return sum(len(build_points(p)[0]) for p in panels)


def run_panels(
    run_id: str,
    panels: List[ExperimentConfig],
    out_dir: str,
    workers: int,
    log_callback: Optional[Callable[[str], None]] = None,
) -> ResultTable:
    """
    Runs every panel, writes CSVs and the manifest, then re-raises the first
    numerical-invariant violation, if any.
    """
    plan(panels)
    tables, rows, configs = {}, {}, {}
    first_error = None
    for cfg in panels:
        points, coordinates = build_points(cfg)
        tasks = [(cfg.evaluator, point) for point in points]
        result = process_sweep_core(cfg.panel, tasks, coordinates, evaluate_point, workers, log_callback)
        tables[cfg.panel] = result["table"]
        rows[cfg.panel] = len(result["table"])
        configs[cfg.panel] = cfg.manifest_entry()
        first_error = first_error or result["first_numerical_error"]

    head = panels[0]
    manifest = build_manifest(run_id, head.preset, head.profile, head.params.master_seed, configs, rows)
    ResultFormatter(out_dir).write(run_id, tables, manifest)

    if first_error is not None:
        raise first_error
    return ResultTable(run_id=run_id, panels=tables, manifest=manifest)


def run_preset(
    preset_id: str,
    profile: Optional[str] = None,
    seed: Optional[int] = None,
    out_dir: Optional[str] = None,
    workers: Optional[int] = None,
    validate_only: bool = False,
) -> Optional[ResultTable]:
    """Regenerates the dataset of a preset."""
    panels = _with_seed(get_preset(preset_id, profile or settings.DEFAULT_PROFILE), seed)
    if validate_only:
        logger.info(f"Preset '{preset_id}' is valid: {plan(panels)} sweep point(s)")
        return None
    out = settings.create_dirs(out_dir)
    return run_panels(sanitize_filename(preset_id), panels, out, workers or settings.ZENO_OTTO_WORKERS)


def run_config(
    path: str,
    seed: Optional[int] = None,
    out_dir: Optional[str] = None,
    workers: Optional[int] = None,
    validate_only: bool = False,
) -> Optional[ResultTable]:
    """Runs a TOML experiment config, or the preset it names with its overrides."""
    cfg = ExperimentConfigValidator(ExperimentConfig).validate_file(path)
    if cfg.preset:
        panels = apply_overrides(get_preset(cfg.preset, cfg.profile), cfg)
        run_id = cfg.preset
    else:
        panels = [cfg]
        run_id = os.path.splitext(os.path.basename(path))[0]
    panels = _with_seed(panels, seed)

    if validate_only:
        logger.info(f"Config '{path}' is valid: {plan(panels)} sweep point(s)")
        return None
    out = settings.create_dirs(out_dir or cfg.output_dir)
    return run_panels(sanitize_filename(run_id), panels, out, workers or cfg.parallelism)
