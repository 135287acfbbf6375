import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from wienervar.core.exceptions import ConfigurationError
from wienervar.schemas.record import RunRecord
from wienervar.services.experiment_runner import RECORD_FILE, write_csv

logger = logging.getLogger(__name__)

# Leading columns per series; anything else a record carries follows in record order
SERIES_COLUMNS: Dict[str, List[str]] = {
    "optimizer_trace": ["iter"],
    "lambda_scan": ["lambda", "value", "stderr", "deficit", "deficit_stderr"],
    "g_prime": ["x", "g", "gprime", "sigma"],
    "capital_g": ["xi", "G"],
    "clark_ocone_points": ["s", "x", "quadrature", "closed_form"],
    "truncation": ["floor_n", "cap_m", "value", "stderr"],
}


def load_record(path: Union[str, Path]) -> RunRecord:
    """Read a record.json, or the record inside a run directory."""
    path = Path(path)
    if path.is_dir():
        path = path / RECORD_FILE
    try:
        return RunRecord.model_validate(json.loads(path.read_text(encoding="utf-8")))
    except FileNotFoundError:
        raise ConfigurationError("run record not found", path=str(path))
    except (json.JSONDecodeError, ValueError) as e:
        raise ConfigurationError("run record is not readable", path=str(path), reason=str(e).splitlines()[0])


def series_columns(name: str, rows: List[Dict[str, Any]]) -> List[str]:
    columns = [c for c in SERIES_COLUMNS.get(name, []) if any(c in row for row in rows)]
    for row in rows:
        columns.extend(k for k in row if k not in columns)
    return columns


def emit_plot_data(
    record: Union[RunRecord, str, Path],
    what: str,
    out_dir: Optional[Union[str, Path]] = None,
    record_dir: Optional[Path] = None,
) -> Path:
    """
    Write one series of a run record as a tidy CSV, one observation per row.

    The file lands in out_dir, or next to the record when out_dir is None.
    """
    if not isinstance(record, RunRecord):
        record_dir = Path(record) if Path(record).is_dir() else Path(record).parent
        record = load_record(record)
    rows = record.series.get(what)
    if rows is None:
        raise ConfigurationError(
            "the record has no such series",
            series=what,
            available=sorted(record.series),
            experiment_id=record.experiment_id,
        )
    target = Path(out_dir) if out_dir is not None else (record_dir or Path("."))
    target.mkdir(parents=True, exist_ok=True)
    path = write_csv(target / f"{record.experiment_id}.{what}.csv", rows, series_columns(what, rows))
    logger.info(f"Wrote {len(rows)} rows of '{what}' to {path}")
    return path
