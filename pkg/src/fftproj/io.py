"""
Field, phase-map and configuration files.

CSV fields: one row per (voxel, evaluation point) with columns
``I, J, q`` followed by the tensor components in row-major order, written
with 17 significant digits.  Phase maps: rows ``I, J, phase_id``.  Header
lines start with ``#``.  VTK output is legacy ASCII STRUCTURED_POINTS with
cell data.  Configs are ``key = value`` lines.
"""

from __future__ import annotations

import ast
import json
from pathlib import Path
from typing import Iterable

import numpy as np

FLOAT_FMT = "%.17g"


def _header(lines: Iterable[str] | None) -> str:
    return "".join(f"# {line}\n" for line in (lines or []))


def write_field_csv(path, values: np.ndarray, header: Iterable[str] | None = None) -> None:
    """Write a (Nx, Ny, nq, ...) field; trailing axes are flattened row-major."""
    values = np.asarray(values, dtype=float)
    if values.ndim == 2:
        values = values[:, :, None]
    nx, ny, nq = values.shape[:3]
    comps = values.reshape(nx, ny, nq, -1)
    ii, jj, qq = np.meshgrid(np.arange(nx), np.arange(ny), np.arange(nq), indexing="ij")
    names = ",".join(f"c{k}" for k in range(comps.shape[-1]))
    with open(path, "w") as fh:
        fh.write(_header(header))
        fh.write(f"I,J,q,{names}\n")
        rows = comps.reshape(-1, comps.shape[-1])
        index = np.stack([ii.ravel(), jj.ravel(), qq.ravel()], axis=-1)
        for idx, row in zip(index, rows):
            fh.write("%d,%d,%d," % tuple(idx) + ",".join(FLOAT_FMT % v for v in row) + "\n")


def read_field_csv(path, tensor_shape: tuple[int, ...] = ()) -> np.ndarray:
    data = np.loadtxt(path, delimiter=",", comments="#", skiprows=_count_header(path) + 1, ndmin=2)
    idx = data[:, :3].astype(int)
    nx, ny, nq = idx.max(axis=0) + 1
    out = np.zeros((nx, ny, nq, data.shape[1] - 3))
    out[idx[:, 0], idx[:, 1], idx[:, 2]] = data[:, 3:]
    return out.reshape(nx, ny, nq, *tensor_shape) if tensor_shape else out


def _count_header(path) -> int:
    count = 0
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            count += 1
    return count


def write_phase_map_csv(path, ids: np.ndarray, header: Iterable[str] | None = None) -> None:
    ids = np.asarray(ids, dtype=int)
    ii, jj = np.meshgrid(np.arange(ids.shape[0]), np.arange(ids.shape[1]), indexing="ij")
    with open(path, "w") as fh:
        fh.write(_header(header))
        fh.write("I,J,phase_id\n")
        for i, j, p in zip(ii.ravel(), jj.ravel(), ids.ravel()):
            fh.write(f"{i},{j},{p}\n")


def read_phase_map_csv(path) -> np.ndarray:
    data = np.loadtxt(path, delimiter=",", comments="#", skiprows=_count_header(path) + 1, dtype=int, ndmin=2)
    nx, ny = data[:, :2].max(axis=0) + 1
    ids = np.full((nx, ny), -1, dtype=int)
    ids[data[:, 0], data[:, 1]] = data[:, 2]
    if np.any(ids < 0):
        raise ValueError(f"{path}: phase map does not cover every voxel")
    return ids


def write_vtk(path, grid, fields: dict[str, np.ndarray], title: str = "fftproj field") -> None:
    """
    Legacy VTK structured points with one cell per voxel.

    Scalars of shape (Nx, Ny) are written directly; tensor fields
    (Nx, Ny, nq, 2, 2) are split into scalars named ``name_q_ij``.
    """
    nx, ny = grid.nb_pts
    dx, dy = grid.spacing
    lines = [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {nx + 1} {ny + 1} 1",
        "ORIGIN 0 0 0",
        f"SPACING {FLOAT_FMT % dx} {FLOAT_FMT % dy} 1",
        f"CELL_DATA {nx * ny}",
    ]
    for name, arr in fields.items():
        arr = np.asarray(arr, dtype=float)
        scalars = {}
        if arr.ndim == 2:
            scalars[name] = arr
        else:
            flat = arr.reshape(nx, ny, arr.shape[2], -1)
            for q in range(flat.shape[2]):
                for c in range(flat.shape[3]):
                    i, j = divmod(c, 2)
                    scalars[f"{name}_{q}_{i}{j}"] = flat[:, :, q, c]
        for sname, values in scalars.items():
            lines.append(f"SCALARS {sname} double 1")
            lines.append("LOOKUP_TABLE default")
            # VTK runs x fastest
            lines.extend(FLOAT_FMT % v for v in values.T.ravel())
    Path(path).write_text("\n".join(lines) + "\n")


def parse_value(text: str):
    text = text.strip()
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        pass
    if text.lower() in ("inf", "+inf", "-inf", "nan"):
        return float(text)
    if "," in text:
        return [parse_value(part) for part in text.split(",")]
    return text


def read_config(path) -> dict:
    """Key-value config (``key = value`` per line, ``#`` comments) or a JSON manifest."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        data = json.loads(text)
        return data.get("config", data)
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = parse_value(value)
    return out


def write_config(path, config: dict) -> None:
    with open(path, "w") as fh:
        for key, value in config.items():
            fh.write(f"{key} = {format_value(value)}\n")


def format_value(value) -> str:
    if isinstance(value, (list, tuple)):
        return ", ".join(format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)
