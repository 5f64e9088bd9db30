import json

import numpy as np
import pytest

from fftproj import io
from fftproj.grid import Grid


def test_field_csv_round_trip(tmp_path, rng):
    values = rng.standard_normal((4, 3, 2, 2, 2)) * 10.0 ** rng.integers(-300, 300, (4, 3, 2, 2, 2))
    path = tmp_path / "f.csv"
    io.write_field_csv(path, values, ["a header", "second line"])
    assert np.array_equal(io.read_field_csv(path, (2, 2)), values)
    lines = path.read_text().splitlines()
    assert lines[:3] == ["# a header", "# second line", "I,J,q,c0,c1,c2,c3"]
    assert len(lines) == 3 + 4 * 3 * 2


def test_scalar_field_csv(tmp_path):
    values = np.arange(6.0).reshape(2, 3) / 7
    path = tmp_path / "s.csv"
    io.write_field_csv(path, values)
    back = io.read_field_csv(path)
    assert back.shape == (2, 3, 1, 1) and np.array_equal(back[:, :, 0, 0], values)


def test_phase_map_round_trip(tmp_path, rng):
    ids = rng.integers(0, 4, (5, 7))
    path = tmp_path / "p.csv"
    io.write_phase_map_csv(path, ids, ["phase 0: matrix"])
    assert np.array_equal(io.read_phase_map_csv(path), ids)


def test_phase_map_must_cover_grid(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("I,J,phase_id\n0,0,1\n1,1,0\n")
    with pytest.raises(ValueError, match="every voxel"):
        io.read_phase_map_csv(path)


def test_vtk_layout(tmp_path):
    g = Grid((3, 2), lengths=(1.5, 1.0))
    tensor = np.zeros((3, 2, 2, 2, 2))
    tensor[2, 0, 1, 0, 1] = 5.0
    scalar = np.arange(6.0).reshape(3, 2)
    path = tmp_path / "f.vtk"
    io.write_vtk(path, g, {"phase": scalar, "P": tensor})
    text = path.read_text().splitlines()
    assert text[0] == "# vtk DataFile Version 3.0"
    assert "DIMENSIONS 4 3 1" in text and "CELL_DATA 6" in text and "SPACING 0.5 0.5 1" in text
    start = text.index("SCALARS phase double 1") + 2
    # x runs fastest
    assert [float(v) for v in text[start:start + 6]] == [0, 2, 4, 1, 3, 5]
    start = text.index("SCALARS P_1_01 double 1") + 2
    assert [float(v) for v in text[start:start + 6]] == [0, 0, 5, 0, 0, 0]
    assert sum(line.startswith("SCALARS P_") for line in text) == 8


@pytest.mark.parametrize("text,value", [
    ("3", 3), ("0.25", 0.25), ("1e-8", 1e-8), ("true", True), ("False", False),
    ("fe_linear", "fe_linear"), ("1, 2.5", (1, 2.5)), ("inf", float("inf")),
    ("1e-4, inf", [1e-4, float("inf")]),
    ("a, b", ["a", "b"]), ("data/x.csv", "data/x.csv"),
])
def test_parse_value(text, value):
    assert io.parse_value(text) == value


def test_config_round_trip(tmp_path):
    cfg = {"scenario": "eshelby", "nx": 75, "E": [1.0, 0.1], "scheme": "fe_linear", "write_vtk": True}
    path = tmp_path / "run.cfg"
    io.write_config(path, cfg)
    back = io.read_config(path)
    assert back == {"scenario": "eshelby", "nx": 75, "E": (1.0, 0.1), "scheme": "fe_linear",
                    "write_vtk": True}


def test_config_comments_and_errors(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# comment\nnx = 9  # trailing\n\nscheme = forward\n")
    assert io.read_config(path) == {"nx": 9, "scheme": "forward"}
    path.write_text("nx 9\n")
    with pytest.raises(ValueError, match="key = value"):
        io.read_config(path)


def test_config_from_manifest(tmp_path):
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps({"config": {"nx": 5}, "status": "ok"}))
    assert io.read_config(path) == {"nx": 5}
