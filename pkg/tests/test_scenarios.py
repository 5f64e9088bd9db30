import json

import numpy as np
import pytest

from fftproj import io
from fftproj.scenarios import (
    DEFAULT_DAMAGE_MAP,
    ScenarioConfig,
    compare_schemes,
    preset,
    replay,
    run_scenario,
    single_voxel_ids,
    two_pillars_ids,
)
from fftproj.stencils import SCHEMES


def csv_files(manifest):
    return [f for f in manifest["files"] if f.endswith(".csv")]


def test_presets_fill_defaults():
    cfg = preset("single_voxel").resolved()
    assert (cfg.nx, cfg.ny) == (17, 17) and cfg.E == (1.0, 0.1)
    assert preset("eshelby").resolved().nx == 151
    assert preset("eshelby", nx=75, ny=75).resolved().nx == 75


def test_config_validation(tmp_path):
    with pytest.raises(ValueError):
        ScenarioConfig(scenario="nope")
    with pytest.raises(ValueError):
        ScenarioConfig(scenario="single_voxel", scheme="spline")
    with pytest.raises(ValueError):
        ScenarioConfig(scenario="custom")
    with pytest.raises(ValueError, match="unknown config keys"):
        ScenarioConfig.from_dict({"scenario": "single_voxel", "colour": 1})


def test_config_dict_round_trip():
    cfg = preset("damage", nx=None, E=[1.0, 2.0, 3.0], scheme="forward")
    assert ScenarioConfig.from_dict(cfg.to_dict()) == cfg
    assert ScenarioConfig.from_dict({"scenario": "eshelby", "E": 2.0}).E == (2.0,)


def test_geometries():
    ids = single_voxel_ids(17, 17)
    assert ids.sum() == 1 and ids[8, 8] == 1
    ids = two_pillars_ids(17, 17)
    assert np.all(ids[7] == 2) and np.all(ids[16] == 2)
    assert np.argwhere(ids == 1).tolist() == [[2, 8], [3, 8], [4, 8]]
    assert np.all(ids[8:16] == 0)
    with pytest.raises(ValueError):
        two_pillars_ids(6, 6)


def test_damage_map_supplied():
    ids = io.read_phase_map_csv(DEFAULT_DAMAGE_MAP)
    assert ids.shape == (89, 89)
    gel = np.mean(ids == 2)
    assert 0.015 < gel < 0.025


def test_single_voxel_run(tmp_path):
    m = run_scenario(preset("single_voxel", scheme="fe_linear", write_vtk=True), tmp_path)
    assert m["status"] == "ok"
    res = m["results"]
    assert res["ringing_component"] == "stress_01" and res["ringing_score"] < 0.02
    assert set(m["files"]) >= {"phase_map.csv", "strain.csv", "stress.csv", "line_cuts.csv", "fields.vtk"}
    cuts = (tmp_path / "line_cuts.csv").read_text().splitlines()
    assert cuts[0] == "row,I,q,stress_01"
    assert len(cuts) == 1 + 4 * 17 * 2
    stress = io.read_field_csv(tmp_path / "stress.csv", (2, 2))
    assert stress.shape == (17, 17, 2, 2, 2)
    saved = json.loads((tmp_path / "manifest.json").read_text())
    assert saved["config"]["nx"] == 17 and saved["config"]["newton_tol"] is None


def test_single_voxel_fourier_zero_lines(tmp_path):
    m = run_scenario(preset("single_voxel", scheme="fourier", write_fields=False), tmp_path)
    assert m["results"]["inhomogeneity_line_max_abs"] <= 1e-10


def test_two_pillars_forward_decoupled(tmp_path):
    m = run_scenario(preset("two_pillars", scheme="forward"), tmp_path)
    res = m["results"]
    assert m["status"] == "ok"
    assert res["right_pillar_max_abs"] <= 1e-6 * res["left_pillar_max_abs"]


def test_eshelby_small_grid(tmp_path):
    m = run_scenario(preset("eshelby", nx=41, ny=41, images=2), tmp_path)
    res = m["results"]
    assert res["inclusion_mean_rel_error"] < 0.05
    assert len(res["numeric_inclusion_mean"]) == 2
    assert "analytic_strain.csv" in m["files"]
    header = (tmp_path / "line_cuts.csv").read_text().splitlines()[0]
    assert header == "row,component,I,q,numeric,analytic"


def test_eshelby_fourier_reports_error(tmp_path):
    m = run_scenario(preset("eshelby", scheme="fourier", nx=41, ny=41, images=2), tmp_path)
    fe = run_scenario(preset("eshelby", nx=41, ny=41, images=2), tmp_path / "fe")
    assert m["results"]["field_rel_error_l2"] > fe["results"]["field_rel_error_l2"]
    assert m["results"]["ringing_score"] > fe["results"]["ringing_score"]


def small_damage_map(tmp_path, n=11):
    ids = np.zeros((n, n), int)
    ids[: n // 2] = 1
    ids[n // 2, n // 2] = 2
    path = tmp_path / "map.csv"
    io.write_phase_map_csv(path, ids)
    return path


def test_damage_run(tmp_path):
    cfg = preset("damage", phase_map=str(small_damage_map(tmp_path)), n_steps=60,
                 eigenstrain_amplitude=6e-3)
    m = run_scenario(cfg, tmp_path / "out")
    res = m["results"]
    assert m["status"] == "ok" and res["steps"] == 60
    assert res["damage_fraction_monotone"] and res["failed_fraction_monotone"]
    assert res["final_damage_fraction"] > 0
    assert res["initiation_adjacent_to_gel"]
    lines = (tmp_path / "out" / "damage_fraction.csv").read_text().splitlines()
    assert lines[0] == "step,damage_fraction,failed_fraction" and len(lines) == 61


def test_failed_run_still_writes_manifest(tmp_path):
    m = run_scenario(preset("single_voxel", newton_max_iter=1, newton_tol=1e-14), tmp_path)
    assert m["status"] == "failed" and "Newton" in m["message"]
    assert json.loads((tmp_path / "manifest.json").read_text())["status"] == "failed"


def test_custom_scenario(tmp_path):
    path = tmp_path / "m.csv"
    io.write_phase_map_csv(path, np.eye(7, dtype=int))
    cfg = ScenarioConfig(scenario="custom", phase_map=str(path), E=(1.0, 0.5),
                         strain=(0.01, 0.0, 0.0, 0.0))
    m = run_scenario(cfg, tmp_path / "out")
    assert m["status"] == "ok" and m["config"]["nx"] == 7


def test_rerun_is_bit_identical(tmp_path):
    cfg = preset("single_voxel", scheme="least_squares")
    a = run_scenario(cfg, tmp_path / "a")
    run_scenario(cfg, tmp_path / "b")
    for name in csv_files(a):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_manifest_replay(tmp_path):
    a = run_scenario(preset("two_pillars", scheme="fe_linear", nx=12, ny=9), tmp_path / "a")
    b = replay(tmp_path / "a" / "manifest.json", tmp_path / "b")
    assert b["config"] == a["config"]
    for name in csv_files(a):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_compare_schemes_all_six(tmp_path):
    table = compare_schemes(preset("single_voxel", write_fields=False), SCHEMES, tmp_path)
    assert [r["scheme"] for r in table] == list(SCHEMES)
    assert all(r["status"] == "ok" for r in table)
    score = {r["scheme"]: r["ringing_score"] for r in table}
    assert score["fourier"] > 20 * score["fe_linear"]
    lines = (tmp_path / "comparison.csv").read_text().splitlines()
    assert len(lines) == 7


def test_compare_schemes_even_grid_skips(tmp_path):
    table = compare_schemes(preset("single_voxel", nx=16, ny=16, write_fields=False),
                            ["fourier", "fe_linear", "central"], tmp_path)
    status = {r["scheme"]: r["status"] for r in table}
    assert status == {"fourier": "skipped", "fe_linear": "ok", "central": "skipped"}
    assert "even grid" in table[0]["reason"]


def test_compare_schemes_empty():
    with pytest.raises(ValueError):
        compare_schemes(preset("single_voxel"), [])
