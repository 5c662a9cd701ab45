import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from porepd.metrics import CrackTracker, crack_metrics

DX = 0.0025
X = np.arange(40) * DX


def line(cracked):
    phi = np.zeros(X.size)
    phi[list(cracked)] = 0.6
    return phi


def test_precrack_only():
    rec = crack_metrics(line(range(20)), X, DX)
    assert rec.tip == pytest.approx(X[19])
    assert rec.length == pytest.approx(20 * DX)
    assert rec.islands == []


def test_island_five_cells_ahead():
    rec = crack_metrics(line(list(range(10)) + [14]), X, DX)
    assert rec.tip == pytest.approx(X[9])
    assert len(rec.islands) == 1
    loc, gap = rec.islands[0]
    assert loc == pytest.approx(X[14])
    assert gap == pytest.approx(5 * DX)
    assert rec.length == pytest.approx(11 * DX)


def test_island_gap_boundary_is_inclusive():
    rec = crack_metrics(line(list(range(10)) + [11]), X, DX)
    assert len(rec.islands) == 1
    assert rec.islands[0][1] == pytest.approx(2 * DX)
    rec = crack_metrics(line(list(range(10)) + [11]), X, DX, gap_cells=3.0)
    assert rec.islands == []


def test_no_crack_at_origin():
    rec = crack_metrics(line([5, 6]), X, DX)
    assert rec.tip == pytest.approx(-DX)
    assert rec.islands[0][0] == pytest.approx(X[5])


def test_threshold_is_inclusive():
    phi = np.zeros(X.size)
    phi[:3] = 0.5
    assert crack_metrics(phi, X, DX, threshold=0.5).length == pytest.approx(3 * DX)
    assert crack_metrics(phi, X, DX, threshold=0.51).length == 0.0


def test_tracker_opens_and_resolves_events():
    tr = CrackTracker(X, DX, 0.5, 2.0)
    tr.update(line(range(10)), 0.0)
    tr.update(line(list(range(10)) + [15, 16]), 1.0)
    tr.update(line(list(range(12)) + [15, 16]), 2.0)
    assert len(tr.events) == 1
    assert tr.events[0]["resolved_time"] is None
    tr.update(line(range(17)), 3.0)
    ev = tr.events[0]
    assert ev["time"] == 1.0 and ev["resolved_time"] == 3.0
    assert ev["gap"] == pytest.approx(6 * DX)
    t, tip, length = tr.arrays()
    np.testing.assert_allclose(t, [0, 1, 2, 3])
    assert np.all(np.diff(length) >= 0)
    assert tip[-1] == pytest.approx(X[16])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.lists(st.integers(0, 39), max_size=8), min_size=1, max_size=15))
def test_length_non_decreasing_under_monotone_damage(batches):
    tr = CrackTracker(X, DX, 0.5)
    cracked = set()
    for k, batch in enumerate(batches):
        cracked |= set(batch)
        tr.update(line(sorted(cracked)), float(k))
    _, tip, length = tr.arrays()
    assert np.all(np.diff(length) >= 0)
    assert np.all(np.diff(tip) >= -1e-15)
    for ev in tr.events:
        assert ev["gap"] > 0
        assert ev["resolved_time"] is None or ev["resolved_time"] >= ev["time"]
