import math

import numpy as np
import pytest

from porepd import io
from porepd.discretization import Domain2D, build_grid
from porepd.errors import PorePDError


def test_csv_format(tmp_path):
    path = tmp_path / "probe.csv"
    io.write_csv(path, ["time", "value"], [[0.0, 0.1], [1e-7, -1.0 / 3.0]])
    raw = path.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().splitlines()
    assert lines[0] == "time,value"
    assert lines[1] == "0,0.10000000000000001"
    t, v = (float(s) for s in lines[2].split(","))
    assert t == 1e-7 and v == -1.0 / 3.0


def test_csv_round_trips_doubles(tmp_path):
    rng = np.random.default_rng(0)
    data = rng.standard_normal((20, 3)) * 10.0 ** rng.integers(-20, 20, (20, 3))
    path = tmp_path / "r.csv"
    io.write_csv(path, ["a", "b", "c"], data)
    back = np.loadtxt(path, delimiter=",", skiprows=1)
    np.testing.assert_array_equal(back, data)


def test_csv_nan_and_empty(tmp_path):
    io.write_csv(tmp_path / "e.csv", ["time", "gap"], [])
    assert (tmp_path / "e.csv").read_text() == "time,gap\n"
    io.write_csv(tmp_path / "n.csv", ["time", "gap"], [[1.0, math.nan]])
    assert (tmp_path / "n.csv").read_text().splitlines()[1] == "1,nan"


def test_vtk_structure(tmp_path):
    grid, mesh = build_grid(Domain2D(0.003, 0.002, 0.001))
    n = grid.n_nodes
    u = np.arange(2 * n, dtype=float).reshape(n, 2) * 1e-6
    path = tmp_path / "f.vtk"
    io.write_vtk(path, grid, u, np.linspace(0, 1, n), np.zeros(n), np.full(mesh.n_elements, 2e-5))
    text = path.read_text()
    lines = text.splitlines()
    assert lines[0] == "# vtk DataFile Version 3.0"
    assert lines[2] == "ASCII"
    assert lines[3] == "DATASET STRUCTURED_GRID"
    assert lines[4] == "DIMENSIONS 4 3 1"
    assert lines[5] == f"POINTS {n} double"
    assert f"POINT_DATA {n}" in lines
    assert "VECTORS displacement double" in lines
    assert "SCALARS pressure double 1" in lines
    assert "SCALARS damage double 1" in lines
    assert f"CELL_DATA {mesh.n_elements}" in lines
    assert "SCALARS aperture double 1" in lines
    pts = np.array([[float(v) for v in lines[6 + k].split()] for k in range(n)])
    np.testing.assert_array_equal(pts[:, :2], grid.coords)
    k = lines.index("VECTORS displacement double")
    vec = np.array([[float(v) for v in lines[k + 1 + j].split()] for j in range(n)])
    np.testing.assert_array_equal(vec[:, :2], u)


def test_write_failure_is_reported(tmp_path):
    target = tmp_path / "missing" / "x.csv"
    with pytest.raises(PorePDError, match="cannot write"):
        io.write_csv(target, ["a"], [[1.0]])
