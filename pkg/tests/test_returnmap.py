import numpy as np
import pytest

from vipair.core import PI, SIDE_T, baseline_params, event_on_b, next_impact
from vipair.returnmap import (
    EmptyFilterResult,
    GridSpec,
    ReturnClass,
    first_return_B,
    partition_by_class,
    project_phase_planes,
    r1_filter,
    sweep_surfaces,
)


def test_first_return_classes(params35):
    # low-speed, early-phase starts hop on the bottom wall (BB)
    s = first_return_B(0.2, 0.1, params35)
    assert s.klass == ReturnClass.BB
    assert s.intermediate_events == ()
    assert s.v_out == pytest.approx(0.0945, abs=2e-4)
    assert s.phi_out == pytest.approx(0.6394, abs=2e-4)
    # the attracting band returns through one top impact (BTB)
    s = first_return_B(0.7, 0.3, params35)
    assert s.klass == ReturnClass.BTB
    assert len(s.intermediate_events) == 1
    assert s.intermediate_events[0].side == SIDE_T


def test_first_return_matches_manual_chaining(params35, rng):
    for _ in range(25):
        v = float(rng.uniform(0.05, 1.0))
        phi = float(rng.uniform(0.0, PI))
        s = first_return_B(v, phi, params35)
        e = event_on_b(v, phi, params35)
        inter = 0
        while True:
            e = next_impact(e, params35)
            if e.side == "B":
                break
            inter += 1
        assert s.n_intermediate if hasattr(s, "n_intermediate") else True
        assert len(s.intermediate_events) == inter
        assert s.v_out == pytest.approx(e.velocity_in, abs=1e-12)
        assert s.phi_out == pytest.approx(e.phase, abs=1e-12)


def test_btb_samples_are_ordered(params35):
    s = first_return_B(0.8, 0.4, params35)
    assert s.klass == ReturnClass.BTB
    t_mid = s.intermediate_events[0].time
    assert event_on_b(0.8, 0.4, params35).time < t_mid
    assert s.v_out > 0


def test_sweep_grid_cardinality(params35):
    surf = sweep_surfaces(GridSpec(n_v=2, n_phi=2), params35)
    assert len(surf) == 4


def test_sweep_determinism(params35):
    g = GridSpec(n_v=8, n_phi=8)
    a = sweep_surfaces(g, params35)
    b = sweep_surfaces(g, params35)
    assert np.array_equal(a.v_out, b.v_out, equal_nan=True)
    assert np.array_equal(a.phi_out, b.phi_out, equal_nan=True)
    assert all(x == y for x, y in zip(a.klass, b.klass))


def test_classification_total(params35):
    surf = sweep_surfaces(GridSpec(n_v=20, n_phi=20), params35)
    assert all(k in ReturnClass for k in surf.klass)
    counts = surf.class_counts()
    assert sum(counts.values()) == len(surf)


def test_grid_nodes_cover_open_interval():
    g = GridSpec(n_v=10, n_phi=5, v_range=(0.0, 1.0), phi_range=(0.0, PI))
    v = g.v_nodes()
    assert v.min() > 0 and v.max() == pytest.approx(1.0)
    p = g.phi_nodes()
    assert p[0] == 0.0 and p[-1] == pytest.approx(PI)
    with pytest.raises(ValueError):
        GridSpec(n_v=1, n_phi=5)


def test_bttb_only_beyond_unit_velocity():
    p = baseline_params(0.35)
    grid = GridSpec(n_v=40, n_phi=40, v_range=(0.0, 1.5), phi_range=(0.0, 2 * PI))
    surf = sweep_surfaces(grid, p)
    vk, _, _, _ = surf.class_samples(ReturnClass.BTTB)
    assert len(vk) > 0
    assert vk.min() > 1.0


def test_partition_raster(params35):
    surf = sweep_surfaces(GridSpec(n_v=12, n_phi=9), params35)
    labels = partition_by_class(surf)
    assert labels.shape == (12, 9)
    valid = {k.value for k in ReturnClass}
    assert set(labels.ravel()) <= valid


def test_r1_filter_monotone_in_delta(params35):
    grid = GridSpec(n_v=30, n_phi=30)
    surf = sweep_surfaces(grid, params35)
    small = r1_filter([0.35], 1.2, grid, params35, surfaces={0.35: surf})
    big = r1_filter([0.35], 1.4, grid, params35, surfaces={0.35: surf})
    pts_small = {tuple(row) for row in small.points}
    pts_big = {tuple(row) for row in big.points}
    assert pts_small
    assert pts_small < pts_big


def test_r1_filter_delta_one_empty(params35):
    grid = GridSpec(n_v=10, n_phi=10)
    surf = sweep_surfaces(grid, params35)
    with pytest.warns(EmptyFilterResult):
        res = r1_filter([0.35], 1.0, grid, params35, surfaces={0.35: surf})
    assert len(res.points) == 0


def test_r1_filter_bounding_box(params35):
    # union over the d range pins the region near the published rectangle
    d_values = [round(d, 2) for d in np.arange(0.26, 0.351, 0.01)]
    res = r1_filter(d_values, 1.2, GridSpec(n_v=40, n_phi=40), params35)
    lo_v, hi_v, lo_p, hi_p = res.bounding_box
    assert lo_v == pytest.approx(0.63, abs=0.05)
    assert hi_v == pytest.approx(0.94, abs=0.05)
    assert lo_p == pytest.approx(0.15, abs=0.05)
    assert hi_p == pytest.approx(0.45, abs=0.05)


def test_phase_plane_strands(surface35):
    strands = project_phase_planes(surface35, delta=1.2)
    assert len(strands) == surface35.grid.n_phi
    # small-slope near-diagonal BTB points cluster below pi/2
    small_slope_phis = []
    for s in strands:
        btb = np.array([k == ReturnClass.BTB for k in s.klass])
        pts = s.near_diagonal & btb
        if not pts.any():
            continue
        slope = np.gradient(np.nan_to_num(s.v_out), s.v_in)
        for i in np.flatnonzero(pts):
            if abs(slope[i]) < 1.0:
                small_slope_phis.append(s.phi)
    assert small_slope_phis
    assert max(small_slope_phis) < PI / 2
