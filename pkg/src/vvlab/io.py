"""CSV and manifest persistence (17 significant digits, no timestamps)."""
from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Sequence

import numpy as np

FLOAT_FORMAT = "%.17g"


def write_csv(path, header: Sequence[str], columns) -> Path:
    """Write equal-length columns with a one-line comma-separated header."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    if data.shape[1] != len(header):
        raise ValueError("header and columns disagree in length")
    np.savetxt(path, data, fmt=FLOAT_FORMAT, delimiter=",", header=",".join(header), comments="")
    return path


def read_csv(path):
    """Return ``(header, data)`` with ``data`` of shape ``(rows, columns)``."""
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data


def write_snapshot(path, x, values) -> Path:
    values = np.asarray(values, dtype=float).reshape(len(x), -1)
    header = ["x"] + [f"u{i + 1}" for i in range(values.shape[1])]
    return write_csv(path, header, [x] + [values[:, i] for i in range(values.shape[1])])


def read_snapshot(path):
    """Return ``(x, values)`` from a snapshot file."""
    header, data = read_csv(path)
    if header[0] != "x":
        raise ValueError(f"{path} is not a snapshot file")
    return data[:, 0], data[:, 1:]


def config_hash(config_dict: dict) -> str:
    blob = json.dumps(config_dict, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def write_manifest(path, manifest: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def read_manifest(path) -> dict:
    return json.loads(Path(path).read_text())
