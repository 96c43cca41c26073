"""Pool CSV ingestion and JSON result documents."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

from .core import EnergyModel, Pool, Selection, validate_pool
from .errors import PoolFormatError

REQUIRED_COLUMNS = ("id", "accuracy")


def _number(text: str, column: str, row: int) -> float:
    try:
        value = float(text)
    except (TypeError, ValueError):
        raise PoolFormatError(f"row {row}: {column} {text!r} is not a number") from None
    if not math.isfinite(value):
        raise PoolFormatError(f"row {row}: {column} {text!r} is not finite")
    return value


def parse_pool_csv(text: str) -> Pool:
    """Parse ``id,accuracy[,cost]`` rows; a missing cost column means cost 1."""
    reader = csv.DictReader(io.StringIO(text))
    header = [h.strip() for h in (reader.fieldnames or [])]
    missing = [c for c in REQUIRED_COLUMNS if c not in header]
    if missing:
        raise PoolFormatError(f"missing column(s) {', '.join(missing)} in header {header}")
    reader.fieldnames = header
    has_cost = "cost" in header
    rows = []
    for line, rec in enumerate(reader, start=2):
        if rec.get(None):
            raise PoolFormatError(f"row {line}: too many fields")
        if all(v in (None, "") for v in rec.values()):
            continue
        mid = (rec["id"] or "").strip()
        if not mid:
            raise PoolFormatError(f"row {line}: empty id")
        acc = _number(rec["accuracy"], "accuracy", line)
        cost = _number(rec["cost"], "cost", line) if has_cost else 1.0
        rows.append((mid, acc, cost))
    return validate_pool(rows)


def read_pool_csv(path) -> Pool:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise PoolFormatError(f"cannot read pool file {path}: {exc.strerror}") from None
    except UnicodeDecodeError:
        raise PoolFormatError(f"pool file {path} is not UTF-8") from None
    return parse_pool_csv(text)


def write_pool_csv(pool: Pool, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "accuracy", "cost"])
        for mid, acc, cost in pool.records():
            w.writerow([mid, repr(acc), repr(cost)])


def parse_weights(text: str) -> tuple[float, ...]:
    """Decision weights from a comma-separated list or a file holding one."""
    p = Path(text)
    if p.is_file():
        text = p.read_text(encoding="utf-8")
    parts = [s for s in text.replace("\n", ",").split(",") if s.strip()]
    try:
        return tuple(float(s) for s in parts)
    except ValueError:
        raise PoolFormatError(f"--weights: cannot parse {text!r} as numbers") from None


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def pool_from_document(doc: dict) -> Pool:
    return validate_pool(tuple(r) for r in doc["input"]["pool"])


def model_from_document(doc: dict) -> EnergyModel:
    m = doc["input"]["model"]
    if m["kind"] == "plain":
        return EnergyModel.plain()
    tables = {int(k): tuple(v) for k, v in m["tables"].items()}
    curve = tuple(m["curve"]) if m["curve"] is not None else None
    return EnergyModel("constrained", tables, curve)


def verify_document(doc: dict, tol: float = 1e-12) -> bool:
    """Recompute cost and energy of the recorded selection from the embedded pool."""
    pool = pool_from_document(doc)
    model = model_from_document(doc)
    sel = doc["selection"]
    index = {mid: i for i, mid in enumerate(pool.ids)}
    again = Selection.build(pool, [index[m] for m in sel["ids"]], model)
    cost_ok = abs(again.total_cost - sel["total_cost"]) <= tol * max(1.0, abs(sel["total_cost"]))
    return cost_ok and abs(again.energy - sel["energy"]) <= tol
