import json
import logging
import os
from typing import Any, Dict, List

import pandas as pd

from app.core.config import settings


# Configure Logging
logger = logging.getLogger(__name__)


class ResultFormatter:
    """
    Writes result panels as CSV files and the run manifest as JSON.
    Output bytes depend only on the data: no timestamps, sorted manifest keys,
    shortest round-trip float formatting.
    """

    def __init__(self, output_dir: str):
        """
        Args:
            output_dir (str): Directory that receives one sub-directory per run.
        """
        self.output_dir = output_dir

    def run_dir(self, run_id: str) -> str:
        path = os.path.join(self.output_dir, run_id)
        os.makedirs(path, exist_ok=True)
        return path

    def write_panel(self, run_id: str, panel: str, df: pd.DataFrame) -> str:
        path = os.path.join(self.run_dir(run_id), f"{panel}.csv")
        df.to_csv(path, index=False, lineterminator="\n")
        logger.debug(f"Wrote {len(df)} row(s) to {path}")
        return path

    def write_manifest(self, run_id: str, manifest: Dict[str, Any]) -> str:
        path = os.path.join(self.run_dir(run_id), "manifest.json")
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(manifest, f, sort_keys=True, indent=2, allow_nan=True)
            f.write("\n")
        return path

    def write(self, run_id: str, panels: Dict[str, pd.DataFrame], manifest: Dict[str, Any]) -> List[str]:
        """Writes every panel and then the manifest; returns the file paths."""
        paths = [self.write_panel(run_id, name, df) for name, df in panels.items()]
        paths.append(self.write_manifest(run_id, manifest))
        logger.info(f"Results written to {self.run_dir(run_id)} ({len(panels)} panel(s))")
        return paths


def build_manifest(
    run_id: str,
    preset: str | None,
    profile: str,
    master_seed: int,
    panel_configs: Dict[str, Dict[str, Any]],
    panel_rows: Dict[str, int],
) -> Dict[str, Any]:
    """Everything needed to regenerate the run's CSVs."""
    return {
        "run_id": run_id,
        "preset": preset,
        "profile": profile,
        "master_seed": master_seed,
        "schema_version": settings.SCHEMA_VERSION,
        "code_version": settings.VERSION,
        "panels": sorted(panel_configs),
        "rows": panel_rows,
        "configs": panel_configs,
    }
