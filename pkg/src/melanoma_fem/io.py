"""Run configs and boundary time series on disk.

Boundary series are three CSV files ``E1.csv``, ``E2.csv``, ``E3.csv``: a
header row, then one row per recorded step holding ``t`` and one column per
observation node.  Numbers are written with 17 significant digits, which
round-trips IEEE doubles exactly.  ``manifest.json`` describes the columns.
"""

from __future__ import annotations

import csv
import json
from dataclasses import fields
from pathlib import Path

import numpy as np

from .errors import ConfigError, UnknownMonth
from .hybrid import BoundaryRecord, SimulationConfig

SCHEMA_VERSION = 1
COMPONENT_FILES = ("E1.csv", "E2.csv", "E3.csv")

CONFIG_KEYS = tuple(f.name for f in fields(SimulationConfig))


def fmt(value: float) -> str:
    return format(float(value), ".17g")


def write_boundary_series(record: BoundaryRecord, directory, config: SimulationConfig | None = None) -> Path:
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
        values = record.values
        header = ["t"] + [f"node_{int(i)}" for i in record.node_ids]
        for comp, name in enumerate(COMPONENT_FILES):
            with open(directory / name, "w", newline="", encoding="utf-8") as fh:
                fh.write(",".join(header) + "\n")
                for t, row in zip(record.times, values[:, :, comp]):
                    fh.write(fmt(t) + "," + ",".join(fmt(v) for v in row) + "\n")
        manifest = {
            "schema_version": SCHEMA_VERSION,
            "month": None if config is None else config.month,
            "config": None if config is None else config.to_dict(),
            "node_ids": [int(i) for i in record.node_ids],
            "nodes": [[float(c) for c in p] for p in record.coords],
            "time_step": None if config is None else config.tau,
            "record_stride": None if config is None else config.record_stride,
            "steps_recorded": len(record.times),
            "files": list(COMPONENT_FILES),
        }
        with open(directory / "manifest.json", "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=1, ensure_ascii=False)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write boundary series to {directory}: {exc.strerror or exc}") from exc
    return directory


def read_boundary_series(directory) -> tuple[np.ndarray, np.ndarray, dict]:
    """Return ``(times, values[steps, nodes, 3], manifest)``."""
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text(encoding="utf-8"))
    comps = []
    times = None
    for name in COMPONENT_FILES:
        with open(directory / name, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        data = np.array(rows[1:], dtype=float).reshape(len(rows) - 1, len(rows[0]))
        if len(rows[0]) - 1 != len(manifest["node_ids"]):
            raise ValueError(f"{name}: {len(rows[0]) - 1} node columns, manifest lists {len(manifest['node_ids'])}")
        times = data[:, 0]
        comps.append(data[:, 1:])
    return times, np.stack(comps, axis=-1), manifest


def config_from_dict(raw: dict) -> SimulationConfig:
    """Strict conversion: unknown keys are rejected, ``month`` is required."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(raw) - set(CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"{unknown[0]}: unknown config key (allowed: {', '.join(CONFIG_KEYS)})")
    if "month" not in raw:
        raise ConfigError("month: required key is missing")
    types = {"h": float, "tau": float, "T": float, "omega": float, "amplitude": float, "scaling_factor": float}
    kwargs = {}
    for key, value in raw.items():
        if key in types:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{key}: expected a number, got {value!r}")
            value = float(value)
        elif key == "stage_thresholds":
            if not isinstance(value, (list, tuple)) or len(value) != 2:
                raise ConfigError(f"stage_thresholds: expected two numbers, got {value!r}")
        elif key == "vacuum" and not isinstance(value, bool):
            raise ConfigError(f"vacuum: expected true/false, got {value!r}")
        kwargs[key] = value
    try:
        return SimulationConfig(**kwargs)
    except UnknownMonth:
        raise
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def read_config(path) -> SimulationConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return config_from_dict(raw)


def write_config(config: SimulationConfig, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(config.to_dict(), indent=1) + "\n", encoding="utf-8")
    return path
