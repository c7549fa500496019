"""JSON-lines experiment records and CSV series."""
from __future__ import annotations

import csv
import json
import logging
import math
import sys
import threading
from fractions import Fraction
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Union

import numpy as np

logger = logging.getLogger(__name__)

# Significant digits kept for floats in records
FLOAT_DIGITS = 12
PAPER_QUALITATIVE = "paper-qualitative"
DERIVED_ORACLE = "derived-oracle"

_write_lock = threading.Lock()


def make_check(name: str, value, bound, passed: bool, source: str) -> Dict[str, object]:
    """One numeric claim together with where its tolerance comes from."""

    if source not in (PAPER_QUALITATIVE, DERIVED_ORACLE):
        raise ValueError(f"Unknown tolerance source {source!r}")
    return {"name": name, "value": value, "bound": bound, "passed": bool(passed), "source": source}


def normalise(obj):
    """Plain JSON types with floats rounded to FLOAT_DIGITS significant digits."""

    if isinstance(obj, Mapping):
        return {str(k): normalise(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [normalise(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return normalise(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if not math.isfinite(value):
            return None
        return float(f"{value:.{FLOAT_DIGITS}g}")
    if isinstance(obj, complex):
        return [normalise(obj.real), normalise(obj.imag)]
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "to_json"):
        return normalise(obj.to_json())
    return str(obj)


def experiment_record(
    command: str,
    config: Mapping[str, object],
    results: Mapping[str, object],
    checks: Sequence[Mapping[str, object]] = (),
    table_hash: Optional[str] = None,
    timing: Optional[Mapping[str, float]] = None,
) -> Dict[str, object]:
    return {
        "command": command,
        "config": normalise(config),
        "results": normalise(results),
        "checks": normalise(list(checks)),
        "table_hash": table_hash,
        "timing": normalise(dict(timing or {})),
    }


def dumps_record(record: Mapping[str, object]) -> str:
    return json.dumps(normalise(record), sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def write_record(record: Mapping[str, object], out: Optional[Union[str, Path]] = None) -> str:
    """Append one JSON line to ``out`` (stdout when None); returns the line."""

    line = dumps_record(record)
    with _write_lock:
        if out is None:
            sys.stdout.write(line + "\n")
            sys.stdout.flush()
        else:
            path = Path(out)
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "a", encoding="utf-8") as f:
                f.write(line + "\n")
            logger.debug("Record for %s appended to %s", record.get("command"), path)
    return line


def read_records(path: Union[str, Path]) -> List[Dict[str, object]]:
    with open(path, encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


def save_series_csv(filename: Union[str, Path], header: Sequence[str], rows: Iterable[Sequence]) -> int:
    """Write a header row then data rows; returns the number of data rows."""

    count = 0
    with open(filename, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(list(header))
        for row in rows:
            writer.writerow(list(row))
            count += 1
    logger.debug("%d rows written to %s", count, filename)
    return count


def save_distribution_csv(filename: Union[str, Path], rows: Iterable[Sequence]) -> int:
    """``(x, count, probability)`` rows; x is written as dot-joined coordinates."""

    return save_series_csv(
        filename,
        ["x", "count", "probability"],
        ((".".join(str(c) for c in x), count, prob) for x, count, prob in rows),
    )


def save_z_csv(filename: Union[str, Path], values: Sequence[float]) -> int:
    return save_series_csv(filename, ["index", "z"], enumerate(values))


def save_weight_grid_csv(filename: Union[str, Path], grid: Sequence[float], values: Sequence[float]) -> int:
    return save_series_csv(filename, ["u", "value"], zip(grid, values))
