import filecmp
import math
import os

import numpy as np
import pytest

from porepd import scenarios
from porepd.errors import ConfigurationError, StabilityError, ValidationError

SMALL_COLUMN = """
[scenario]
kind = consolidation
[domain]
height = 0.3
[time]
dt = 4e-6
steps = 25
[output]
field_interval = 10
"""

SMALL_FORERUNNING = """
[scenario]
kind = forerunning
case = {case}
[domain]
width = 0.06
height = 0.0325
[time]
dt = 1e-7
steps = 40
[crack]
precrack_length = 0.02
[loading]
load_halfwidth = 0.005
[output]
field_interval = 20
"""


def small_forerunning(case=1, **changes):
    cfg = scenarios.parse_scenario(SMALL_FORERUNNING.format(case=case))
    return cfg.with_values(**changes) if changes else cfg


def test_shipped_consolidation_column():
    cfg = scenarios.load_scenario(scenarios.shipped_config("consolidation.cfg"))
    assert (cfg.E, cfg.nu, cfg.alpha, cfg.porosity) == (0.254e9, 0.3, 0.7883, 0.48)
    assert (cfg.K_solid, cfg.K_fluid, cfg.permeability) == (11e9, 3.3e9, 3.55e-12)
    assert cfg.density == pytest.approx(1884.0)
    assert cfg.horizon == 0.015 and cfg.m_ratio == 2
    d = cfg.derived()
    assert d["s_r"] == pytest.approx(1.514e-10, rel=5e-4)
    assert d["dt_max"] == pytest.approx(3.52e-5, rel=5e-3)


@pytest.mark.parametrize("case", [1, 2, 3])
def test_shipped_forerunning_fracture(case):
    cfg = scenarios.load_scenario(scenarios.shipped_config(f"forerunning_case{case}.cfg"))
    assert cfg.case == case and cfg.saturated == (case != 1)
    assert (cfg.E, cfg.nu, cfg.Gc) == (10e9, 0.25, 1.0)
    assert cfg.spacing == pytest.approx(2.5e-3)
    assert cfg.dt == 1e-7 and cfg.n_steps == 10_000
    d = cfg.derived()
    assert d["s_c"] == pytest.approx(1.668e-4, rel=5e-4)
    assert d["dt_max"] == pytest.approx(1.44e-6, rel=5e-3)
    assert math.isinf(cfg.K_solid)


def test_missing_dt_names_field():
    with pytest.raises(ValidationError, match=r"\[time\] dt"):
        scenarios.parse_scenario("[scenario]\nkind = consolidation\n")


def test_every_problem_is_listed():
    text = "[scenario]\nkind = consolidation\n[time]\ndt = 1e-6\ntheta = 2\n[solid]\nnu = 0.7\nfoo = 1\n"
    with pytest.raises(ValidationError) as info:
        scenarios.parse_scenario(text)
    assert any("foo" in p for p in info.value.problems)
    with pytest.raises(ValidationError) as info:
        scenarios.parse_scenario(text.replace("foo = 1\n", ""))
    joined = " ".join(info.value.problems)
    assert "theta" in joined and "nu" in joined


def test_fracture_large_dt_is_unstable():
    with pytest.raises(StabilityError):
        small_forerunning().with_values(dt=2e-6)


def test_bad_values_rejected():
    with pytest.raises(ValidationError, match="boolean"):
        scenarios.parse_scenario("[scenario]\nkind = consolidation\nsaturated = maybe\n[time]\ndt = 1e-6\n")
    with pytest.raises(ValidationError, match="case"):
        scenarios.parse_scenario(SMALL_FORERUNNING.format(case=4))
    with pytest.raises(ConfigurationError):
        scenarios.parse_scenario("not an ini file")
    with pytest.raises(ConfigurationError, match="not found"):
        scenarios.load_scenario("/nonexistent/x.cfg")


def test_snap_to_grid_and_width_cells():
    cfg = scenarios.parse_scenario(SMALL_COLUMN)
    assert cfg.width == pytest.approx(6 * cfg.spacing)
    cfg2 = cfg.with_values(m_ratio=3)
    assert cfg2.spacing == pytest.approx(0.005)
    assert cfg2.width == pytest.approx(0.03)
    assert cfg2.height / cfg2.spacing == pytest.approx(round(cfg2.height / cfg2.spacing))


def test_consolidation_constraints():
    scen = scenarios.build_scenario(scenarios.parse_scenario(SMALL_COLUMN))
    sim, grid = scen.simulation, scen.grid
    y = grid.coords[:, 1]
    assert np.all(sim.fixed[y < grid.horizon - 1e-12, 1])
    top = y > y.max() - 1e-12
    np.testing.assert_array_equal(sim.loading.pressure_nodes, np.nonzero(top)[0])
    res = scen.run()
    assert res.steps == 25
    assert res.series["bottom_p"].shape == (26, 2)
    assert res.series["top_uy"][-1, 1] < 0
    assert np.all(sim.state.p[top] == 0.0)


def test_zero_step_run_writes_initial_state(tmp_path):
    scen = scenarios.build_scenario(scenarios.parse_scenario(SMALL_COLUMN))
    res = scen.run(tmp_path, n_steps=0)
    assert res.steps == 0
    assert res.series["top_uy"].shape == (1, 2)
    assert (tmp_path / "fields_0000000.vtk").exists()
    assert (tmp_path / "bottom_p.csv").read_text().splitlines() == ["time,value", "0,0"]


def test_output_files_deterministic(tmp_path):
    for name in ("a", "b"):
        scenarios.build_scenario(small_forerunning(2)).run(tmp_path / name)
    files = sorted(os.listdir(tmp_path / "a"))
    assert "crack_length.csv" in files and "forerunning_events.csv" in files
    assert "fields_0000020.vtk" in files
    match, mismatch, errors = filecmp.cmpfiles(tmp_path / "a", tmp_path / "b", files, shallow=False)
    assert mismatch == [] and errors == []


def test_forerunning_symmetry_edge_fixed():
    scen = scenarios.build_scenario(small_forerunning(1))
    sim, grid = scen.simulation, scen.grid
    edge = grid.coords[:, 0] < 1e-12
    for _ in range(40):
        sim.advance()
        assert np.abs(sim.state.u[edge, 0]).max() <= 1e-10
    # the load opens the crack
    assert scen.probes["crack_opening_center"](sim) > 0


def test_forerunning_precrack_and_centerline_restriction():
    scen = scenarios.build_scenario(small_forerunning(1))
    grid = scen.grid
    phi = scen.crack_line_damage()
    x = grid.coords[grid.node_index(np.arange(grid.nx + 1), 0), 0]
    assert np.all(phi[x <= 0.02 - 1e-12] >= scen.config.crack_threshold)
    assert np.all(phi[x > 0.02 + grid.horizon] == 0.0)
    allowed = scen.simulation.allowed
    yc = grid.coords[:, 1].max() / 2
    yi, yj = grid.coords[grid.bond_i, 1], grid.coords[grid.bond_j, 1]
    np.testing.assert_array_equal(allowed, (yi - yc) * (yj - yc) < 0)


def test_case3_injection_and_drained_edges():
    scen = scenarios.build_scenario(small_forerunning(3))
    sim = scen.simulation
    inj = sim.loading.injection
    assert inj.sum() == pytest.approx(0.5 * scen.config.injection_rate)
    assert np.count_nonzero(inj) == 2
    sim.run(5)
    assert sim.state.p.max() > 0
    assert np.all(sim.state.p[sim.loading.pressure_nodes] == 0.0)


def test_dry_and_zero_coupling_saturated_paths_agree():
    dry_cfg = small_forerunning(1)
    wet_cfg = dry_cfg.with_values(saturated=True, alpha=0.0, porosity=0.0, density=dry_cfg.density)
    dry = scenarios.build_scenario(dry_cfg)
    wet = scenarios.build_scenario(wet_cfg)
    assert wet.simulation.flow is not None and dry.simulation.flow is None
    a, b = dry.run(), wet.run()
    np.testing.assert_array_equal(dry.simulation.state.u, wet.simulation.state.u)
    assert np.all(wet.simulation.state.p == 0.0)
    np.testing.assert_array_equal(a.series["crack_length"], b.series["crack_length"])


def test_build_rejects_wrong_kind():
    with pytest.raises(ConfigurationError):
        scenarios.build_forerunning(scenarios.parse_scenario(SMALL_COLUMN))
    with pytest.raises(ConfigurationError):
        scenarios.build_consolidation(small_forerunning())
