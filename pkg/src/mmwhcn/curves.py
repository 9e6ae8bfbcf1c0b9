"""Result carrier for coverage/association sweeps and its CSV/JSON round trip.

CSV schema (header mandatory): ``sweep_var,value,approach,probability`` with
an optional trailing ``stderr`` column when any curve carries Monte Carlo
error bars. Floats are written with `repr`, which round-trips bit-exactly.
Run-level metadata (config fingerprint, quadrature settings, truncation radii,
seed, wall time) goes to a JSON sidecar next to the CSV.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


@dataclass
class CoverageCurve:
    sweep_variable: str
    values: np.ndarray  # display units (tau in dB, r_los in m, ...)
    probabilities: np.ndarray
    approach: str
    stderr: np.ndarray | None = None
    fingerprint: str = ""
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.probabilities = np.asarray(self.probabilities, dtype=float)
        if self.stderr is not None:
            self.stderr = np.asarray(self.stderr, dtype=float)
            if self.stderr.shape != self.values.shape:
                raise ValueError("stderr shape mismatch")
        if self.values.shape != self.probabilities.shape:
            raise ValueError("values/probabilities shape mismatch")
        if len(self.values) == 0:
            raise ValueError("empty curve")
        if np.any(np.diff(self.values) <= 0):
            raise ValueError("sweep values must be strictly increasing")
        if np.any(self.probabilities < 0) or np.any(self.probabilities > 1):
            raise ValueError("probabilities must lie in [0, 1]")

    def __len__(self):
        return len(self.values)


def write_curves_csv(path, curves) -> None:
    curves = list(curves)
    with_err = any(c.stderr is not None for c in curves)
    header = "sweep_var,value,approach,probability"
    if with_err:
        header += ",stderr"
    lines = [header]
    for c in curves:
        for i in range(len(c)):
            row = (
                f"{c.sweep_variable},{float(c.values[i])!r},"
                f"{c.approach},{float(c.probabilities[i])!r}"
            )
            if with_err:
                row += f",{float(c.stderr[i])!r}" if c.stderr is not None else ","
            lines.append(row)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_curves_csv(path) -> list:
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty curve file")
    header = lines[0].split(",")
    expected = ["sweep_var", "value", "approach", "probability"]
    if header[: len(expected)] != expected:
        raise ValueError(f"{path}: unexpected header {lines[0]!r}")
    has_err = len(header) > len(expected)
    groups: dict = {}
    for ln in lines[1:]:
        parts = ln.split(",")
        sweep_var, value, approach, prob = parts[:4]
        err = parts[4] if has_err and len(parts) > 4 else ""
        key = (sweep_var, approach)
        rec = groups.setdefault(key, {"v": [], "p": [], "e": []})
        rec["v"].append(float(value))
        rec["p"].append(float(prob))
        rec["e"].append(float(err) if err else np.nan)
    curves = []
    for (sweep_var, approach), rec in groups.items():
        err = np.asarray(rec["e"])
        curves.append(
            CoverageCurve(
                sweep_variable=sweep_var,
                values=np.asarray(rec["v"]),
                probabilities=np.asarray(rec["p"]),
                approach=approach,
                stderr=None if np.all(np.isnan(err)) else err,
            )
        )
    return curves


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def write_sidecar(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True, default=repr)
        fh.write("\n")


def read_sidecar(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
