"""Deterministic CSV and JSON emission shared by the CLI and tests."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_csv(path, header: list[str], rows) -> None:
    """UTF-8, LF newlines, header row, no index column."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_csv(path) -> dict[str, list[str]]:
    """Minimal reader for the schemas written by write_csv."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    header = lines[0].split(",")
    cols: dict[str, list[str]] = {h: [] for h in header}
    for ln in lines[1:]:
        for h, v in zip(header, ln.split(",")):
            cols[h].append(v)
    return cols


def _jsonable(v):
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def to_json(obj, indent: int | None = None) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=indent)


def experiment_report(experiment: str, env_spec: dict, params: dict | None,
                      statistics: dict, thresholds: dict, passed: bool) -> dict:
    """The JSON report object emitted by every experiment command."""
    return {
        "experiment": experiment,
        "env": env_spec,
        "params": params,
        "statistics": statistics,
        "thresholds": thresholds,
        "pass": bool(passed),
    }
