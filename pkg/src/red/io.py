"""Deterministic file formats: CSV tables and JSON sidecars.

Every writer here is a pure function of its inputs: floats are rendered
with repr precision (.17g), JSON keys are sorted, and nothing records a
timestamp or hostname.  Reruns with identical inputs produce byte-identical
files, which the experiment harness relies on.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import ConsistencyError
from .model import SystemSpec
from .quantum import WaveField

FLOAT_FORMAT = ".17g"


def fmt(value: float) -> str:
    return format(float(value), FLOAT_FORMAT)


def write_json(path, payload: dict) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    Path(path).write_text(text + "\n")


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())


def _sidecar_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".json")


def _grid_sidecar(spec: SystemSpec, time: float, kind: str, extra: dict = None) -> dict:
    payload = {
        "kind": kind,
        "order": "C",
        "shape": list(spec.grid_points),
        "box": list(spec.axis_box),
        "time": time,
    }
    if extra:
        payload.update(extra)
    return payload


def wave_to_csv(wave: WaveField, csv_path) -> None:
    """Wavefunction as a two-column CSV (real, imaginary), C-order flat.

    A JSON sidecar with the same stem records the grid shape, box, and time
    needed to reassemble the array.
    """
    flat = wave.values.reshape(-1)
    with open(csv_path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["real", "imaginary"])
        for value in flat:
            writer.writerow([fmt(value.real), fmt(value.imag)])
    write_json(_sidecar_path(csv_path), _grid_sidecar(wave.spec, wave.time, "wavefunction"))


def wave_from_csv(csv_path, spec: SystemSpec) -> WaveField:
    sidecar = read_json(_sidecar_path(csv_path))
    if tuple(sidecar["shape"]) != spec.grid_points:
        raise ConsistencyError(
            f"snapshot shape {sidecar['shape']} does not match grid {list(spec.grid_points)}"
        )
    with open(csv_path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if header != ["real", "imaginary"]:
            raise ConsistencyError(f"wavefunction CSV header {header} is not [real, imaginary]")
        rows = [(float(re), float(im)) for re, im in reader]
    flat = np.array([complex(re, im) for re, im in rows])
    return WaveField(flat.reshape(spec.grid_points), spec, time=float(sidecar["time"]))


def density_to_csv(values: np.ndarray, spec: SystemSpec, time: float, csv_path) -> None:
    """Real grid field as a one-column CSV with a JSON sidecar."""
    with open(csv_path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["value"])
        for value in np.asarray(values).reshape(-1):
            writer.writerow([fmt(value)])
    write_json(_sidecar_path(csv_path), _grid_sidecar(spec, time, "density"))


def density_from_csv(csv_path, spec: SystemSpec) -> tuple:
    sidecar = read_json(_sidecar_path(csv_path))
    if tuple(sidecar["shape"]) != spec.grid_points:
        raise ConsistencyError(
            f"snapshot shape {sidecar['shape']} does not match grid {list(spec.grid_points)}"
        )
    with open(csv_path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if header != ["value"]:
            raise ConsistencyError(f"density CSV header {header} is not [value]")
        flat = np.array([float(row[0]) for row in reader])
    return flat.reshape(spec.grid_points), float(sidecar["time"])


class ObservablesWriter:
    """Accumulates observable rows and writes one CSV with a fixed header."""

    def __init__(self, spatial_dim: int):
        axes = range(spatial_dim)
        self.header = (
            ["t"]
            + [f"momentum_{a}" for a in axes]
            + ["energy", "norm", "entropy"]
            + [f"shift_{a}" for a in axes]
            + ["g_total", "g_constant", "g_entropy", "g_h0"]
        )
        self.rows = []

    def add(self, **named) -> None:
        row = []
        consumed = set()
        for column in self.header:
            if column not in named:
                raise ConsistencyError(f"observable row is missing column {column!r}")
            row.append(fmt(named[column]))
            consumed.add(column)
        unknown = set(named) - consumed
        if unknown:
            raise ConsistencyError(f"unknown observable columns: {sorted(unknown)}")
        self.rows.append(row)

    def write(self, path) -> None:
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(self.header)
            writer.writerows(self.rows)


def read_observables(path) -> dict:
    """Columns of an observables.csv as {name: array}."""
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    table = np.asarray(rows, dtype=float).reshape(len(rows), len(header))
    return {name: table[:, i] for i, name in enumerate(header)}
