"""Reading and writing run artifacts: records, fronts, iteration logs."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

from .evaluator import Objectives
from .optimizer import HISTORY_FIELDS, RunRecord

FRONT_HEADER = ("n_selected", "error_pct")
LOG_HEADER = ("iter", "branch", "parent_err", "parent_k", "off_err", "off_k", "r")


def write_text_atomic(path, text: str) -> None:
    """Write via a temp file in the same directory, then rename into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def write_json(path, data) -> None:
    write_text_atomic(path, json.dumps(data, indent=2, sort_keys=True) + "\n")


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def sorted_front(front) -> list[Objectives]:
    return sorted((Objectives(float(e), int(k)) for e, k in front),
                  key=lambda o: (o.n_selected, o.error_pct))


def front_csv_text(front) -> str:
    rows = [(o.n_selected, repr(o.error_pct)) for o in sorted_front(front)]
    return csv_text(FRONT_HEADER, rows)


def write_front_csv(path, front) -> None:
    write_text_atomic(path, front_csv_text(front))


def read_front_csv(path) -> list[Objectives]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or set(FRONT_HEADER) - set(reader.fieldnames):
            raise ValueError(f"{path}: expected header {','.join(FRONT_HEADER)}")
        return [Objectives(float(r["error_pct"]), int(r["n_selected"])) for r in reader]


def read_record(path) -> RunRecord:
    try:
        data = read_json(path)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: corrupt run record ({exc})") from None
    if not isinstance(data, dict):
        raise ValueError(f"{path}: run record must be a JSON object")
    try:
        rec = RunRecord.from_dict(data)
    except TypeError as exc:
        raise ValueError(f"{path}: malformed run record ({exc})") from None
    if not rec.front:
        raise ValueError(f"{path}: run record has an empty front")
    return rec


def write_record(path, record: RunRecord) -> None:
    write_json(path, record.to_dict())


def log_csv_text(history: dict) -> str:
    missing = set(HISTORY_FIELDS) - set(history)
    if missing:
        raise ValueError(f"history lacks columns {sorted(missing)}")
    cols = [history[k] for k in LOG_HEADER]
    return csv_text(LOG_HEADER, zip(*cols))
