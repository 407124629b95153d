import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import pandas as pd

from app.core.exceptions import NumericalInvariantError, ZenoOttoError


# Configure Logging
logger = logging.getLogger(__name__)

Row = Dict[str, Any]
PointEvaluator = Callable[[Any], Tuple[List[Row], Optional[ZenoOttoError]]]


def process_sweep_core(
    panel: str,
    tasks: Sequence[Any],
    coordinates: Sequence[Dict[str, float]],
    evaluate: PointEvaluator,
    workers: int = 1,
    log_callback: Optional[Callable[[str], None]] = None,
) -> Dict[str, Any]:
    """
    Core Sweep Processing Logic. Evaluates every sweep point and assembles the
    panel table in sweep order, whatever the number of workers.

    Args:
        panel (str): Panel name, for logs.
        tasks (Sequence): One picklable task per sweep point.
        coordinates (Sequence[Dict]): Swept parameter values of each point.
        evaluate (PointEvaluator): Module-level function returning (rows, error).
        workers (int): Process count; 1 runs in-process.
        log_callback (Optional[Callable]): Function receiving progress messages.

    Returns:
        Dict[str, Any]: 'table' (DataFrame), 'report' (List of dicts),
        'failed_points' (int) and 'first_numerical_error' (or None).
    """

    # Helper to send logs safely
    def send_log(msg: str):
        if log_callback:
            log_callback(msg)
        else:
            logger.info(f"[{panel}] {msg}")

    send_log(f"Evaluating {len(tasks)} point(s) on {workers} worker(s)")
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            # map preserves submission order
            results = list(executor.map(evaluate, tasks))
    else:
        results = [evaluate(task) for task in tasks]

    rows: List[Row] = []
    report = []
    first_numerical: Optional[NumericalInvariantError] = None
    for index, (coords, (point_rows, error)) in enumerate(zip(coordinates, results)):
        base = {"point": index, **coords}
        if error is None:
            rows.extend({**base, **row, "status": "ok", "error": ""} for row in point_rows)
            report.append({"point": index, "status": "ok", "rows": len(point_rows), "error": ""})
            continue

        rows.append({**base, "status": "error", "error": str(error)})
        report.append({"point": index, "status": "error", "rows": 0, "error": str(error)})
        if first_numerical is None and isinstance(error, NumericalInvariantError):
            first_numerical = error
        send_log(f"❌ point {index}: {error}")

    failed = sum(1 for entry in report if entry["status"] == "error")
    send_log(f"✅ {len(tasks) - failed}/{len(tasks)} point(s) done")
    return {
        "table": pd.DataFrame(rows),
        "report": report,
        "failed_points": failed,
        "first_numerical_error": first_numerical,
    }
