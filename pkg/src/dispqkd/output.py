"""CSV/JSON writers with fixed 9-significant-digit formatting."""
from __future__ import annotations

import csv
import io
import json
import math
from importlib import resources

__all__ = ["format_number", "rows_to_csv", "rows_to_json", "document_to_json", "load_schema"]


def format_number(x) -> str:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        return str(x)
    if isinstance(x, int):
        return str(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return f"{x:.8e}"


def _jsonable(x):
    if isinstance(x, bool) or x is None or isinstance(x, (str, int)):
        return x
    if isinstance(x, float):
        if not math.isfinite(x):
            return None
        return float(f"{x:.8e}")
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if hasattr(x, "item"):  # numpy scalar
        return _jsonable(x.item())
    return str(x)


def _columns(rows: list[dict]) -> list[str]:
    cols: list[str] = []
    for row in rows:
        for key in row:
            if key not in cols:
                cols.append(key)
    return cols


def rows_to_csv(rows: list[dict]) -> str:
    cols = _columns(rows)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in rows:
        w.writerow([format_number(row.get(c, "")) for c in cols])
    return buf.getvalue()


def rows_to_json(rows: list[dict], command: str) -> str:
    doc = {"command": command, "columns": _columns(rows), "rows": rows}
    return document_to_json(doc)


def document_to_json(doc: dict) -> str:
    """Non-finite floats become null."""
    return json.dumps(_jsonable(doc), indent=2, sort_keys=False) + "\n"


def load_schema(name: str) -> dict:
    """Shipped JSON schema: ``table``, ``oracle_report`` or ``mc_report``."""
    text = resources.files("dispqkd").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)
