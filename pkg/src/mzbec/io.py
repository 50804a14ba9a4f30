"""Deterministic result persistence.

CSV floats carry 17 significant digits (full double precision) and JSON
floats render repr-exact with sorted keys, so a repeated run with the
same seed reproduces output byte for byte.  Row rendering operates on
plain dicts so rows that traveled through JSON (service responses)
serialize identically to rows produced in process.
"""

from __future__ import annotations

import json
import os
from typing import Iterable, Sequence

import numpy as np

from .metrology import SensitivityResult

__all__ = [
    "SCALING_COLUMNS",
    "XI_COLUMNS",
    "fmt",
    "scaling_row_dict",
    "render_rows_csv",
    "render_scaling_csv",
    "render_json",
    "IncrementalCsvWriter",
    "write_text",
    "write_errors_sidecar",
    "sidecar_path",
]

SCALING_COLUMNS = (
    "N",
    "u0n",
    "t_bs",
    "t_phase",
    "theta",
    "xi_in",
    "sigma",
    "method",
    "sqrt_m_dtheta",
    "fisher_value",
    "seed",
)
XI_COLUMNS = SCALING_COLUMNS + ("xi_after_bs",)

_INT_COLUMNS = {"N", "seed"}
_STR_COLUMNS = {"method"}


def fmt(value: float) -> str:
    """Full-double-precision decimal rendering."""
    return "%.17g" % float(value)


def scaling_row_dict(row: SensitivityResult, seed: int) -> dict:
    p = row.params
    return {
        "N": int(p.n_atoms),
        "u0n": float(p.u0n),
        "t_bs": float(p.t_bs),
        "t_phase": float(p.t_phase),
        "theta": float(row.theta),
        "xi_in": float(row.xi_in),
        "sigma": float(row.detection_sigma),
        "method": row.method,
        "sqrt_m_dtheta": float(row.sqrt_m_dtheta),
        "fisher_value": float(row.fisher_value),
        "seed": int(seed),
    }


def _field(column: str, value) -> str:
    if column in _STR_COLUMNS:
        return str(value)
    if column in _INT_COLUMNS:
        return str(int(value))
    return fmt(value)


def render_rows_csv(rows: Iterable[dict], columns: Sequence[str] = SCALING_COLUMNS) -> str:
    lines = [",".join(columns)]
    lines.extend(
        ",".join(_field(col, row[col]) for col in columns) for row in rows
    )
    return "\n".join(lines) + "\n"


def render_scaling_csv(rows: Iterable[SensitivityResult], seed: int) -> str:
    return render_rows_csv(scaling_row_dict(row, seed) for row in rows)


def _plain(obj):
    """Recursively convert numpy containers to JSON-serializable types."""
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def render_json(payload) -> str:
    return json.dumps(_plain(payload), sort_keys=True, indent=2) + "\n"


def write_text(path: str, text: str) -> None:
    """Atomic write: render to a sibling temp file, then replace."""
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as handle:
        handle.write(text)
    os.replace(tmp, path)


class IncrementalCsvWriter:
    """Streams scaling-schema rows to a temp file; replace on commit.

    A re-run over the same spec reproduces identical rows, so an
    interrupted partial file is simply superseded by the next complete
    run.
    """

    def __init__(self, path: str, columns: Sequence[str] = SCALING_COLUMNS):
        self.path = path
        self.columns = tuple(columns)
        self._tmp = path + ".tmp"
        self._handle = open(self._tmp, "w", newline="")
        self._handle.write(",".join(self.columns) + "\n")
        self._handle.flush()
        self._committed = False

    def write_row(self, row: SensitivityResult, seed: int) -> None:
        fields = scaling_row_dict(row, seed)
        self._handle.write(
            ",".join(_field(col, fields[col]) for col in self.columns) + "\n"
        )
        self._handle.flush()

    def commit(self) -> None:
        self._handle.close()
        os.replace(self._tmp, self.path)
        self._committed = True

    def close(self) -> None:
        if not self._committed:
            if not self._handle.closed:
                self._handle.close()
            if os.path.exists(self._tmp):
                os.remove(self._tmp)


def sidecar_path(out_path: str) -> str:
    return out_path + ".errors.json"


def write_errors_sidecar(out_path: str, failures: Sequence) -> str:
    """Persist per-point scan failures next to the main output.

    Accepts ScanFailure objects or already-plain {point, error} dicts.
    """
    entries = []
    for f in failures:
        if isinstance(f, dict):
            entries.append({"point": _plain(f.get("point", {})), "error": f.get("error", "")})
        else:
            entries.append({"point": _plain(dict(f.coords)), "error": f.message})
    path = sidecar_path(out_path)
    write_text(path, render_json({"errors": entries}))
    return path
