"""
records.py

Emission of run results:
- JSON documents with sorted keys (one ResultRecord per run)
- CSV tables (per-omega rows, R/G_R curves) with 17 significant digits

Re-running a config with the same seed writes identical bytes, except for
the wall_time field of the JSON record.
"""

from __future__ import annotations

import csv
import io
import json
import math
import platform
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional

import numpy as np

from . import __version__
from .models import ResultRecord


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _ensure_parent_dir(path: Path) -> None:
    if not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)


def format_real(x: float) -> str:
    """17 significant digits, '.' decimal point, no locale."""
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(float(x), ".17g")


def _plain(value: Any) -> Any:
    """Make a JSON-safe structure: numpy scalars, complex numbers and non-finite reals."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [_plain(float(value.real)), _plain(float(value.imag))]
    if isinstance(value, (float, np.floating)):
        x = float(value)
        return x if math.isfinite(x) else format_real(x)
    return value


def versions() -> Dict[str, str]:
    return {
        "speccoc": __version__,
        "numpy": np.__version__,
        "python": platform.python_version(),
    }


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------

def record_to_json(record: ResultRecord) -> str:
    doc = _plain(record.model_dump())
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def write_json(record: ResultRecord, path: Path) -> Path:
    path = Path(path)
    _ensure_parent_dir(path)
    path.write_text(record_to_json(record), encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_real(float(value))
    if isinstance(value, (complex, np.complexfloating)):
        return f"{format_real(value.real)}{'+' if value.imag >= 0 else '-'}{format_real(abs(value.imag))}j"
    return str(value)


def rows_to_csv(rows: List[Dict[str, Any]], fieldnames: Optional[Iterable[str]] = None) -> str:
    if fieldnames is None:
        fieldnames = list(rows[0].keys()) if rows else []
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(fieldnames), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _cell(row.get(k)) for k in writer.fieldnames})
    return buf.getvalue()


def write_csv(rows: List[Dict[str, Any]], path: Path, fieldnames: Optional[Iterable[str]] = None) -> Path:
    path = Path(path)
    _ensure_parent_dir(path)
    with path.open("w", encoding="utf-8", newline="") as f:
        f.write(rows_to_csv(rows, fieldnames))
    return path
