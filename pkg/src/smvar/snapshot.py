"""Field snapshots: raw little-endian float64 in grid order plus a JSON sidecar."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ManifoldMismatchError
from .manifold import Manifold, ScalarField, check_bound


def save_field(path, M: Manifold, u: ScalarField) -> tuple[Path, Path]:
    check_bound(M, u)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    bin_path = path.with_suffix(".bin")
    meta_path = path.with_suffix(".json")
    u.values.astype("<f8").tofile(bin_path)
    meta = {"n": M.n_per_axis, "L": M.side_length, "conformal": not M.is_flat, "order": "x-fastest"}
    meta_path.write_text(json.dumps(meta, indent=2) + "\n")
    return bin_path, meta_path


def load_field(path, M: Manifold) -> ScalarField:
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text())
    if meta.get("order") != "x-fastest":
        raise ValueError(f"unsupported grid order {meta.get('order')!r}")
    if meta["n"] != M.n_per_axis or not np.isclose(meta["L"], M.side_length) or meta["conformal"] != (not M.is_flat):
        raise ManifoldMismatchError(f"snapshot {path} was written on a different grid: {meta}")
    values = np.fromfile(path.with_suffix(".bin"), dtype="<f8")
    return M.field(values)
