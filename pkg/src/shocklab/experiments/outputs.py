"""CSV and JSON-lines writers (floats written with repr for bit-exact round trips)."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

from ..solver import TRAJECTORY_COLUMNS, Trajectory


def _fmt(v):
    return repr(float(v)) if isinstance(v, float) or hasattr(v, "dtype") else v


def write_rows(path, header, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def write_trajectory(path, traj: Trajectory) -> Path:
    rows = ([s.row()[c] for c in TRAJECTORY_COLUMNS] for s in traj.samples)
    return write_rows(path, TRAJECTORY_COLUMNS, rows)


def read_rows(path) -> tuple[list[str], list[list[float]]]:
    with Path(path).open() as fh:
        r = csv.reader(fh)
        header = next(r)
        return header, [[float(x) for x in row] for row in r]


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def write_summary(path, records, cfg) -> Path:
    """One JSON object per line, each tagged with the experiment and config hash."""
    path = Path(path)
    h = cfg.config_hash()
    with path.open("w") as fh:
        for rec in records:
            line = {"experiment": cfg.experiment, "config_hash": h, "seed": cfg.seed, **_jsonable(rec)}
            fh.write(json.dumps(line, sort_keys=True) + "\n")
    return path


def read_summary(path) -> list[dict]:
    return [json.loads(line) for line in Path(path).read_text().splitlines() if line.strip()]
