"""
Scenario presets, runs and scheme comparisons.

A scenario is a flat :class:`ScenarioConfig`; every field can come from a
``key = value`` file or a command-line flag.  ``run_scenario`` writes CSV
fields, line cuts and a JSON manifest into ``output_dir``; the manifest
echoes the full config so it can be replayed.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import io
from .grid import DIM, Grid
from .materials import Phase, PhaseMap
from .oracles.eshelby import EshelbyProblem, eshelby_periodic
from .oracles.ringing import voxel_ringing_score
from .projection import FINITE_STRAIN, SMALL_STRAIN
from .solver import ConvergenceError, LoadCase, SolverConfig, solve, solve_damage
from .stencils import SCHEMES, DerivativeScheme

log = logging.getLogger(__name__)

SCENARIOS = ("single_voxel", "two_pillars", "eshelby", "damage", "custom")

DEFAULT_DAMAGE_MAP = Path(__file__).resolve().parents[2] / "data" / "damage_89.csv"

# preset values; None in a ScenarioConfig means "take the preset"
_PRESETS = {
    "single_voxel": dict(
        nx=17, ny=17, formulation=FINITE_STRAIN, strain=(0.1, 0.0, 0.0, 0.1),
        phase_names=("hard", "soft"), E=(1.0, 0.1), nu=(0.33, 0.33),
    ),
    "two_pillars": dict(
        nx=17, ny=17, formulation=FINITE_STRAIN, strain=(0.0, 0.0, 0.0, 0.1),
        phase_names=("pillar", "soft", "vacuum"), E=(1.0, 0.1, 0.0), nu=(0.33, 0.33, 0.33),
    ),
    "eshelby": dict(
        nx=151, ny=151, formulation=SMALL_STRAIN, strain=(0.01, 0.0, 0.0, 0.01),
        phase_names=("matrix", "inclusion"), E=(1.0, 0.1), nu=(0.33, 0.33),
        radius=0.1, images=5,
    ),
    "damage": dict(
        formulation=SMALL_STRAIN, strain=(0.0, 0.0, 0.0, 0.0),
        phase_names=("paste", "aggregate", "gel"), E=(20.0, 60.0, 10.0), nu=(0.2, 0.2, 0.2),
        eps_u=(1e-4, 1.5e-4, np.inf), alpha=(2.0, 2.0, 1.0), eigenstrain=(0.0, 0.0, 1.0),
        n_steps=1000, eigenstrain_amplitude=20 * 1e-4, newton_tol=1e-5, cg_tol=1e-8,
        cg_max_iter=20000, phase_map=str(DEFAULT_DAMAGE_MAP),
    ),
    "custom": dict(formulation=SMALL_STRAIN, strain=(0.0, 0.0, 0.0, 0.0)),
}

_RINGING_COMPONENT = {
    "single_voxel": ("stress", 0, 1),
    "two_pillars": ("stress", 0, 1),
    "eshelby": ("strain", 0, 1),
    "custom": ("stress", 0, 1),
}


@dataclass(frozen=True)
class ScenarioConfig:
    """
    Flat scenario description.

    ``strain`` is the mean strain measure in row-major order: F - 1 for
    finite strain, the small strain otherwise.  Per-phase parameters are
    tuples indexed by phase id.
    """

    scenario: str
    scheme: str = "fe_linear"
    nx: int | None = None
    ny: int | None = None
    formulation: str | None = None
    strain: tuple[float, ...] | None = None
    phase_map: str | None = None
    phase_names: tuple[str, ...] | None = None
    E: tuple[float, ...] | None = None
    nu: tuple[float, ...] | None = None
    eps_u: tuple[float, ...] | None = None
    alpha: tuple[float, ...] | None = None
    eigenstrain: tuple[float, ...] | None = None
    n_steps: int | None = None
    eigenstrain_amplitude: float | None = None
    radius: float | None = None
    images: int | None = None
    cg_tol: float | None = None
    cg_max_iter: int | None = None
    newton_tol: float | None = None
    newton_max_iter: int | None = None
    output_dir: str = "out"
    write_fields: bool = True
    write_vtk: bool = False

    def __post_init__(self) -> None:
        for key in _TUPLE_KEYS:
            value = getattr(self, key)
            if value is not None:
                value = tuple(value) if isinstance(value, (list, tuple)) else (value,)
                object.__setattr__(self, key, value)
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}; choose from {SCENARIOS}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if self.scenario == "custom" and not self.phase_map:
            raise ValueError("the custom scenario needs a phase_map file")

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        out = asdict(self)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in out.items()}

    def resolved(self) -> "ScenarioConfig":
        """Copy with every None replaced by the preset value."""
        preset = _PRESETS[self.scenario]
        updates = {
            f.name: preset[f.name]
            for f in fields(self)
            if getattr(self, f.name) is None and f.name in preset
        }
        cfg = replace(self, **updates)
        if cfg.nx is None or cfg.ny is None:
            if not cfg.phase_map:
                raise ValueError(f"scenario {cfg.scenario!r} needs nx and ny")
        return cfg

    def solver_config(self) -> SolverConfig:
        kwargs = {
            name: getattr(self, name)
            for name in ("cg_tol", "cg_max_iter", "newton_tol", "newton_max_iter")
            if getattr(self, name) is not None
        }
        return SolverConfig(**kwargs)

    def mean_strain(self) -> np.ndarray:
        return np.asarray(self.strain, dtype=float).reshape(DIM, DIM)

    def phases(self) -> list[Phase]:
        n = len(self.E)
        names = self.phase_names or tuple(f"phase{i}" for i in range(n))

        def column(values, default):
            return tuple(values) if values is not None else (default,) * n

        table = zip(
            names, self.E, column(self.nu, 0.33), column(self.eps_u, np.inf),
            column(self.alpha, 1.0), column(self.eigenstrain, 0.0),
        )
        return [Phase(*row) for row in table]


_TUPLE_KEYS = {"strain", "phase_names", "E", "nu", "eps_u", "alpha", "eigenstrain"}


def preset(name: str, **overrides) -> ScenarioConfig:
    return ScenarioConfig(scenario=name, **overrides)


# -- geometry ---------------------------------------------------------------


def single_voxel_ids(nx: int, ny: int) -> np.ndarray:
    ids = np.zeros((nx, ny), dtype=int)
    ids[nx // 2, ny // 2] = 1
    return ids


def two_pillars_ids(nx: int, ny: int) -> np.ndarray:
    """
    Left pillar with a three-voxel soft layer at mid height, vacuum column,
    right pillar, vacuum column.  Under periodicity the two vacuum columns
    give two layers of zero stiffness between the pillars.
    """
    if nx < 8:
        raise ValueError("two_pillars needs nx >= 8")
    gap = nx // 2 - 1
    ids = np.zeros((nx, ny), dtype=int)
    ids[gap, :] = 2
    ids[nx - 1, :] = 2
    ids[gap // 2 - 1 : gap // 2 + 2, ny // 2] = 1
    return ids


def _line_cut_rows(cfg: ScenarioConfig) -> dict[str, int]:
    cy = cfg.ny // 2
    if cfg.scenario == "eshelby":
        offset = int(round(cfg.radius / 2 * cfg.ny))
        return {"center": cy, "upper": cy + offset, "lower": cy - offset}
    # the inhomogeneity row, then down row by row
    return {f"row_{k}": cy - k for k in range(4)}


def load_phase_map(cfg: ScenarioConfig) -> np.ndarray:
    if cfg.scenario == "single_voxel":
        return single_voxel_ids(cfg.nx, cfg.ny)
    if cfg.scenario == "two_pillars":
        return two_pillars_ids(cfg.nx, cfg.ny)
    if cfg.scenario == "eshelby":
        grid = Grid((cfg.nx, cfg.ny))
        return eshelby_periodic(_eshelby_problem(cfg), grid, 0).inclusion.astype(int)
    return io.read_phase_map_csv(cfg.phase_map)


def _eshelby_problem(cfg: ScenarioConfig) -> EshelbyProblem:
    return EshelbyProblem(
        axes=(cfg.radius, cfg.radius),
        E_matrix=cfg.E[0], nu_matrix=cfg.nu[0],
        E_inclusion=cfg.E[1], nu_inclusion=cfg.nu[1],
        strain=cfg.mean_strain(), images=cfg.images,
    )


# -- runs -------------------------------------------------------------------


def _line_cuts(values: np.ndarray, rows: dict[str, int]) -> list[list]:
    """Rows of (name, I, q, value) along fixed J."""
    out = []
    for name, j in rows.items():
        for i in range(values.shape[0]):
            for q in range(values.shape[2]):
                out.append([name, i, q, values[i, j, q]])
    return out


def _write_cuts(path: Path, cuts: list[list], header: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "I", "q", header])
        for name, i, q, v in cuts:
            writer.writerow([name, i, q, io.FLOAT_FMT % v])


def _adjacent_to(mask: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Voxels of ``mask`` that touch ``target`` (8-neighborhood, periodic)."""
    near = np.zeros_like(target)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            near |= np.roll(target, (di, dj), axis=(0, 1))
    return mask & near


def run_scenario(cfg: ScenarioConfig, output_dir: str | Path | None = None) -> dict:
    """
    Run one scenario and write its artifacts.

    Returns the manifest (also written as ``manifest.json``).  On solver
    failure the manifest is still written with ``status = "failed"``.
    """
    cfg = cfg.resolved()
    out = Path(output_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "config": cfg.to_dict(),
        "status": "ok",
        "files": [],
        "results": {},
    }
    ids = load_phase_map(cfg)
    cfg = replace(cfg, nx=ids.shape[0], ny=ids.shape[1])
    manifest["config"].update(nx=cfg.nx, ny=cfg.ny)
    grid = Grid((cfg.nx, cfg.ny))
    phases = PhaseMap(ids, cfg.phases())
    scheme = DerivativeScheme(cfg.scheme)
    started = time.perf_counter()

    def add_file(name: str) -> Path:
        manifest["files"].append(name)
        return out / name

    io.write_phase_map_csv(
        add_file("phase_map.csv"), ids,
        [f"scenario {cfg.scenario} {cfg.nx}x{cfg.ny}"]
        + [f"phase {i}: {p.name} E={p.E!r} nu={p.nu!r}" for i, p in enumerate(phases.phases)],
    )
    try:
        if cfg.scenario == "damage":
            _run_damage(cfg, grid, phases, scheme, manifest, add_file)
        else:
            _run_static(cfg, grid, phases, scheme, manifest, add_file)
    except ConvergenceError as err:
        manifest["status"] = "failed"
        manifest["message"] = str(err)
        log.error("%s/%s failed: %s", cfg.scenario, cfg.scheme, err)
    manifest["results"]["wall_time_s"] = time.perf_counter() - started
    _write_manifest(out / "manifest.json", manifest)
    return manifest


def _write_manifest(path: Path, manifest: dict) -> None:
    def default(obj):
        if isinstance(obj, np.generic):
            return obj.item()
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        raise TypeError(type(obj))

    text = json.dumps(manifest, indent=2, sort_keys=True, default=default, allow_nan=True)
    path.write_text(text + "\n")


def _run_static(cfg, grid, phases, scheme, manifest, add_file) -> None:
    results = manifest["results"]
    if cfg.scenario == "eshelby":
        analytic = eshelby_periodic(_eshelby_problem(cfg), grid, cfg.images)
        mean = analytic.load_strain
        results["load_strain"] = mean
        results["analytic_inclusion_mean"] = analytic.inclusion_mean
    else:
        mean = cfg.mean_strain()
    if cfg.formulation == FINITE_STRAIN:
        load = LoadCase.finite_strain(mean)
    else:
        load = LoadCase.small_strain(mean)
    res = solve(grid, scheme, phases, load, cfg.solver_config())
    results.update(
        newton_iterations=res.newton_iterations,
        cg_iterations=res.cg_iterations,
        max_residual=float(res.residuals[-1]),
    )
    kind, i, j = _RINGING_COMPONENT[cfg.scenario]
    field = getattr(res, kind)
    component = field[..., i, j]
    results["ringing_component"] = f"{kind}_{i}{j}"
    results["ringing_score"] = voxel_ringing_score(component, grid)
    if cfg.write_fields:
        io.write_field_csv(add_file("strain.csv"), res.strain, ["strain measure, row-major"])
        io.write_field_csv(add_file("stress.csv"), res.stress, ["stress, row-major"])
    if cfg.write_vtk:
        io.write_vtk(add_file("fields.vtk"), grid, {"strain": res.strain, "stress": res.stress,
                                                   "phase": phases.ids.astype(float)})
    rows = _line_cut_rows(cfg)
    if cfg.scenario == "eshelby":
        _eshelby_outputs(cfg, grid, res, analytic, rows, results, add_file)
    else:
        _write_cuts(add_file("line_cuts.csv"), _line_cuts(component, rows), results["ringing_component"])
    if cfg.scenario == "single_voxel":
        row = component[:, cfg.ny // 2, :]
        col = component[cfg.nx // 2, :, :]
        results["inhomogeneity_line_max_abs"] = float(max(np.abs(row).max(), np.abs(col).max()))
    if cfg.scenario == "two_pillars":
        gap = cfg.nx // 2 - 1
        left = np.abs(component[:gap]).max()
        right = np.abs(component[gap + 1 : cfg.nx - 1]).max()
        results["left_pillar_max_abs"] = float(left)
        results["right_pillar_max_abs"] = float(right)
        results["right_left_ratio"] = float(right / left) if left > 0 else 0.0


def _eshelby_outputs(cfg, grid, res, analytic, rows, results, add_file) -> None:
    mask = analytic.inclusion
    numeric_mean = res.strain[mask].mean(axis=(0, 1))
    ref = analytic.inclusion_mean
    results["numeric_inclusion_mean"] = numeric_mean
    results["inclusion_mean_rel_error"] = float(
        np.linalg.norm(numeric_mean - ref) / np.linalg.norm(ref)
    )
    diff = res.strain - analytic.strain[:, :, None]
    results["field_rel_error_l2"] = float(
        np.linalg.norm(diff) / np.linalg.norm(np.broadcast_to(analytic.strain[:, :, None], diff.shape))
    )
    if cfg.write_fields:
        io.write_field_csv(add_file("analytic_strain.csv"), analytic.strain[:, :, None],
                           ["analytic image-corrected strain at voxel centers"])
    cuts = []
    for name, j in rows.items():
        comp = (0, 0) if name == "center" else (0, 1)
        label = "eps_xx" if comp == (0, 0) else "eps_xy"
        for i in range(cfg.nx):
            for q in range(res.strain.shape[2]):
                cuts.append([name, label, i, q, res.strain[i, j, q, comp[0], comp[1]],
                             analytic.strain[i, j, comp[0], comp[1]]])
    with open(add_file("line_cuts.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "component", "I", "q", "numeric", "analytic"])
        for name, label, i, q, v, a in cuts:
            writer.writerow([name, label, i, q, io.FLOAT_FMT % v, io.FLOAT_FMT % a])


def _run_damage(cfg, grid, phases, scheme, manifest, add_file) -> None:
    results = manifest["results"]
    load = LoadCase.small_strain(cfg.mean_strain(), cfg.n_steps, cfg.eigenstrain_amplitude)
    first = {}

    def progress(step, res):
        if not first and res.damage_fraction[-1] > 0:
            first["step"] = step
            first["damaged"] = np.any(res.damage > 0, axis=2)
        log.debug("step %d: damage fraction %.4f", step, res.damage_fraction[-1])

    try:
        (res,) = solve_damage(grid, scheme, phases, load, cfg.solver_config(), progress=progress)
    except ConvergenceError as err:
        if err.result is not None:
            results["damage_fraction"] = err.result.damage_fraction
        raise
    fraction = res.damage_fraction
    results.update(
        steps=res.step,
        final_damage_fraction=float(fraction[-1]),
        damage_fraction_monotone=bool(np.all(np.diff(fraction) >= 0)),
        final_failed_fraction=float(res.failed_fraction[-1]),
        failed_fraction_monotone=bool(np.all(np.diff(res.failed_fraction) >= 0)),
        ringing_component="damage",
        ringing_score=voxel_ringing_score(res.damage, grid),
        max_residual=float(res.residuals[-1]),
    )
    gel = np.zeros(phases.shape, dtype=bool)
    for i, p in enumerate(phases.phases):
        if p.eigenstrain:
            gel |= phases.ids == i
    if first:
        damaged = first["damaged"]
        near = _adjacent_to(damaged, gel)
        results["initiation_step"] = first["step"]
        results["initiation_voxels"] = int(damaged.sum())
        results["initiation_adjacent_to_gel"] = bool(np.array_equal(near, damaged))
    else:
        results["initiation_step"] = None
    with open(add_file("damage_fraction.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "damage_fraction", "failed_fraction"])
        for step, (value, failed) in enumerate(zip(fraction, res.failed_fraction), 1):
            writer.writerow([step, io.FLOAT_FMT % value, io.FLOAT_FMT % failed])
    if cfg.write_fields:
        io.write_field_csv(add_file("damage.csv"), res.damage, ["damage variable per evaluation point"])
        io.write_field_csv(add_file("strain.csv"), res.strain, ["small strain, row-major"])
    if cfg.write_vtk:
        io.write_vtk(add_file("fields.vtk"), grid, {"damage": res.damage.mean(axis=2),
                                                   "phase": phases.ids.astype(float)})


def compare_schemes(cfg: ScenarioConfig, schemes, output_dir: str | Path | None = None) -> list[dict]:
    """
    Run ``cfg`` once per scheme into ``output_dir/<scheme>`` and tabulate.

    Schemes that are not admissible on an even grid are reported as skipped.
    """
    schemes = list(schemes)
    if not schemes:
        raise ValueError("compare_schemes needs at least one scheme")
    out = Path(output_dir or cfg.output_dir)
    table = []
    for name in schemes:
        run_cfg = replace(cfg, scheme=name)
        row = {"scheme": name, "status": "ok", "ringing_score": None,
               "max_residual": None, "error": None, "reason": ""}
        grid = Grid(load_phase_map(run_cfg.resolved()).shape)
        if any(grid.is_even) and not DerivativeScheme(name).even_grid_safe(grid):
            row.update(status="skipped", reason=f"{name} is not admissible on the even grid {grid.nb_pts}")
            table.append(row)
            continue
        manifest = run_scenario(run_cfg, out / name)
        res = manifest["results"]
        row.update(
            status=manifest["status"],
            ringing_score=res.get("ringing_score"),
            max_residual=res.get("max_residual"),
            error=res.get("inclusion_mean_rel_error"),
            reason=manifest.get("message", ""),
        )
        table.append(row)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "comparison.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(table[0]))
        writer.writeheader()
        for row in table:
            writer.writerow({k: (io.FLOAT_FMT % v if isinstance(v, float) else v) for k, v in row.items()})
    return table


def replay(manifest_path: str | Path, output_dir: str | Path | None = None) -> dict:
    """Rerun the config recorded in a manifest."""
    data = json.loads(Path(manifest_path).read_text())
    return run_scenario(ScenarioConfig.from_dict(data["config"]), output_dir)
