"""CSV and JSON writers for trajectories, scoreboards, catalogs and run manifests.

Floats are written with 17 significant digits so every value round-trips
exactly; JSON is written with sorted keys so reruns are byte-identical.
"""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .dynamics import TrajectorySet


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path, rows: Sequence[dict], columns: Sequence[str] | None = None) -> Path:
    path = Path(path)
    columns = list(columns) if columns is not None else (list(rows[0]) if rows else [])
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(row[c]) for c in columns])
    return path


def read_csv(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def trajectory_rows(data: TrajectorySet, first_id: int = 0) -> list[dict]:
    ids = data.trajectory_ids() + first_id
    rows = []
    for i in range(data.m):
        row = {"traj_id": int(ids[i]), "t": float(data.times[i])}
        for j in range(data.n):
            row[f"x{j + 1}"] = float(data.X[i, j])
        for j in range(data.n):
            row[f"dx{j + 1}"] = float(data.dX[i, j])
        row["regime_label"] = str(data.labels[i])
        rows.append(row)
    return rows


def trajectory_columns(n: int) -> list[str]:
    return ["traj_id", "t"] + [f"x{j + 1}" for j in range(n)] + [f"dx{j + 1}" for j in range(n)] + ["regime_label"]


def write_trajectories(path, data: TrajectorySet, first_id: int = 0) -> Path:
    return write_csv(path, trajectory_rows(data, first_id), trajectory_columns(data.n))


def read_trajectories(path, dt: float | None = None, state_names: Sequence[str] = ()) -> TrajectorySet:
    """Inverse of :func:`write_trajectories`; ``dt`` defaults to the first time step."""
    rows = read_csv(path)
    if not rows:
        raise ValueError(f"{path}: no rows")
    n = sum(1 for c in rows[0] if c.startswith("x"))
    ids = np.array([int(r["traj_id"]) for r in rows])
    times = np.array([float(r["t"]) for r in rows])
    X = np.array([[float(r[f"x{j + 1}"]) for j in range(n)] for r in rows])
    dX = np.array([[float(r[f"dx{j + 1}"]) for j in range(n)] for r in rows])
    labels = np.array([r["regime_label"] for r in rows])
    boundaries = (0,) + tuple(int(i) for i in np.flatnonzero(np.diff(ids)) + 1)
    if dt is None:
        dt = float(times[1] - times[0]) if len(times) > 1 else 1.0
    return TrajectorySet(times, X, dX, boundaries, labels, dt, tuple(state_names))


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _json_safe(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_json_safe(obj), sort_keys=True, indent=2, allow_nan=False) + "\n")
    return path


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def utc_now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def write_manifest(out_dir, command: str, config_hash: str, seed: int, version: str,
                   started: str, outputs: Iterable[Path]) -> Path:
    """Record provenance for a CLI run; every output file is listed with its digest."""
    out_dir = Path(out_dir)
    files = [{"path": str(Path(p).relative_to(out_dir)), "sha256": sha256_file(p)} for p in outputs]
    manifest = {
        "command": command,
        "config_hash": config_hash,
        "seed": seed,
        "version": version,
        "started": started,
        "finished": utc_now(),
        "outputs": sorted(files, key=lambda f: f["path"]),
    }
    return write_json(out_dir / "manifest.json", manifest)
