import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from porepd.discretization import (Domain2D, PrecrackSegment, apply_precrack, build_families, build_grid,
                                   segments_cross, weighted_volume)
from porepd.errors import ConfigurationError, DiscretizationError
from porepd.pd_core import damage


def make(width=0.02, height=0.02, dx=0.001, m_ratio=2):
    grid, mesh = build_grid(Domain2D(width, height, dx))
    build_families(grid, m_ratio)
    return grid, mesh


def test_smallest_lattice():
    grid, mesh = build_grid(Domain2D(2.0, 2.0, 1.0))
    assert grid.n_nodes == 9
    assert mesh.n_elements == 4
    np.testing.assert_array_equal(grid.coords, mesh.coords)


def test_node_volume_forerunning_spacing():
    grid, _ = build_grid(Domain2D(0.01, 0.01, 2.5e-3))
    assert grid.volume[0] == pytest.approx(6.25e-6, rel=1e-12)


def test_non_integer_dimension_names_dimension():
    with pytest.raises(ConfigurationError, match="height"):
        Domain2D(1.0, 1.05, 0.1).cells()
    with pytest.raises(ConfigurationError, match="width"):
        Domain2D(1.03, 1.0, 0.1).cells()


def test_nonpositive_dimension_rejected():
    with pytest.raises(ConfigurationError):
        Domain2D(0.0, 1.0, 0.1)


def test_precrack_endpoints_distinct():
    with pytest.raises(ConfigurationError):
        PrecrackSegment((0.0, 0.0), (0.0, 0.0))


def test_elements_counter_clockwise_and_cover_nodes():
    grid, mesh = make(0.005, 0.004)
    xy = mesh.coords[mesh.elements]
    area = 0.5 * np.sum(xy[:, :, 0] * np.roll(xy[:, :, 1], -1, axis=1)
                        - np.roll(xy[:, :, 0], -1, axis=1) * xy[:, :, 1], axis=1)
    assert np.all(area > 0)
    assert np.all(mesh.detj > 0)
    assert set(np.unique(mesh.elements)) == set(range(grid.n_nodes))


def test_interior_and_corner_family_sizes():
    grid, _ = make()
    sizes = grid.family_sizes()
    centre = grid.node_index(10, 10)
    assert sizes[centre] == 12
    assert sizes[grid.node_index(0, 0)] == 5
    assert sizes[grid.node_index(grid.nx, grid.ny)] == 5


def test_family_radius_and_no_self_bonds():
    grid, _ = make(m_ratio=3)
    assert np.all(grid.length > 0)
    assert np.all(grid.length <= grid.horizon * (1 + 1e-9))
    assert not np.any(grid.bond_i == grid.bond_j)
    assert np.all(grid.influence == 1.0)


def test_bond_symmetry():
    grid, _ = make(m_ratio=3)
    for node in (0, 7, grid.node_index(10, 10)):
        nbr, xi, _ = grid.family(node)
        for j, x in zip(nbr, xi):
            back, xb, _ = grid.family(int(j))
            k = np.nonzero(back == node)[0]
            assert k.size == 1
            np.testing.assert_allclose(xb[k[0]], -x)


def test_weighted_volume_interior_m2():
    dx = 0.001
    grid, _ = make(dx=dx)
    m = weighted_volume(grid, grid.node_index(10, 10))
    assert m == pytest.approx(28 * dx ** 4 * grid.thickness, rel=1e-12)


def test_weighted_volume_single_bond():
    grid, _ = build_grid(Domain2D(1.0, 1.0, 1.0))
    grid.bond_i = np.array([0], dtype=np.int64)
    grid.bond_j = np.array([1], dtype=np.int64)
    grid.length = np.array([1.0])
    grid.influence = np.ones(1)
    grid.volume_factor = np.ones(1)
    grid.family_ptr = np.array([0, 1, 2, 2, 2], dtype=np.int64)
    assert weighted_volume(grid, 0) == pytest.approx(1.0 * grid.volume[1])
    with pytest.raises(DiscretizationError):
        weighted_volume(grid, 2)


def test_weighted_volume_boundary_smaller():
    grid, _ = make()
    m = grid.weighted_volume
    assert m[0] < m[grid.node_index(10, 10)]


def test_weighted_volume_convergence_m4():
    dx = 0.001
    grid, _ = make(0.03, 0.03, dx, m_ratio=4)
    m = weighted_volume(grid, grid.node_index(15, 15))
    cont = math.pi * grid.horizon ** 4 * grid.thickness / 2
    assert 0.85 <= m / cont <= 1.15


def test_precrack_far_outside_breaks_nothing():
    grid, _ = make()
    assert apply_precrack(grid, PrecrackSegment((5.0, 5.0), (6.0, 5.0))) == 0


def test_precrack_horizontal_cuts_crossing_bonds_only():
    grid, _ = make()
    y = 0.0105
    n = apply_precrack(grid, PrecrackSegment((-1.0, y), (1.0, y)))
    yi = grid.coords[grid.bond_i, 1]
    yj = grid.coords[grid.bond_j, 1]
    crossing = (yi - y) * (yj - y) < 0
    np.testing.assert_array_equal(~grid.intact, crossing)
    assert n == int(crossing.sum())


def test_precrack_endpoint_touch_does_not_break():
    grid, _ = build_grid(Domain2D(2.0, 2.0, 1.0))
    build_families(grid, 1)
    # segment ends exactly on the vertical bond (1,0)-(1,1)
    apply_precrack(grid, PrecrackSegment((-1.0, 0.5), (1.0, 0.5)))
    bond = np.nonzero((grid.bond_i == 1) & (grid.bond_j == 4))[0][0]
    assert grid.intact[bond]
    cut = np.nonzero((grid.bond_i == 0) & (grid.bond_j == 3))[0][0]
    assert not grid.intact[cut]


def test_precrack_idempotent():
    grid, _ = make()
    seg = PrecrackSegment((0.0, 0.0105), (0.01, 0.0105))
    first = apply_precrack(grid, seg)
    before = grid.intact.copy()
    assert first > 0
    assert apply_precrack(grid, seg) == 0
    np.testing.assert_array_equal(before, grid.intact)


def test_precrack_face_damage_m2():
    # strict crossing on the m_r = 2 stencil cuts 4 of 12 bonds per face node
    grid, _ = make()
    apply_precrack(grid, PrecrackSegment((-1.0, 0.0105), (1.0, 0.0105)))
    phi = damage(grid)
    face = grid.node_index(np.arange(3, 18), 10)
    np.testing.assert_allclose(phi[face], 1.0 / 3.0)


def test_segments_cross_collinear_is_not_crossing():
    p = np.array([[0.0, 0.0]])
    q = np.array([[2.0, 0.0]])
    assert not segments_cross(p, q, (1.0, 0.0), (3.0, 0.0))[0]
    assert segments_cross(p, q, (1.0, -1.0), (1.0, 1.0))[0]


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(8, 14), st.integers(8, 14))
def test_families_symmetric_property(m_ratio, nx, ny):
    grid, _ = build_grid(Domain2D(nx * 1.0, ny * 1.0, 1.0))
    build_families(grid, m_ratio)
    assert np.all(grid.bond_i < grid.bond_j)
    pairs = set(zip(grid.bond_i.tolist(), grid.bond_j.tolist()))
    assert len(pairs) == grid.n_bonds
    counts = np.bincount(np.concatenate([grid.bond_i, grid.bond_j]), minlength=grid.n_nodes)
    np.testing.assert_array_equal(counts, grid.family_sizes())
