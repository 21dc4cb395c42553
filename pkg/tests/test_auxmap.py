import numpy as np
import pytest

from vipair.auxmap import (
    BoundCurves,
    DomainBox,
    EscapedBox,
    STATEMENT_PART1,
    STATEMENT_PART2,
    TwoCycle,
    build_bound_curves,
    generic_cobweb,
    iterate_updates,
    iterate_wcs,
    r1_plus,
    second_iterate_phase,
    second_iterate_v,
    statement61_case,
    update_region,
    wcs_step,
)
from vipair.composite import Poly2D, Region
from vipair.fitting import poly2d_exponents

PI = np.pi


def test_r1_plus_boxes():
    fp = r1_plus("FP")
    assert fp.as_tuple() == (0.70, 1.0, 0.20, PI / 3)
    pd = r1_plus("PD")
    assert pd.as_tuple() == (0.65, 1.0, 0.13, PI / 3)
    cd = r1_plus("CD")
    assert cd.as_tuple() == (0.64, 1.0, 0.08, PI / 3)
    with pytest.raises(ValueError):
        r1_plus("XX")


def _linear_poly2d(c0, cv, cp):
    exps = tuple(poly2d_exponents(2, 3))
    coeffs = np.zeros(len(exps))
    coeffs[0], coeffs[1], coeffs[2] = c0, cp, cv
    return Poly2D(exponents=exps, coeffs=coeffs)


def test_bound_curves_orientation_and_domination(table):
    box = r1_plus("FP")
    curves = build_bound_curves(box, 0.35, table)
    vs = np.linspace(box.v_min, box.v_max, 40)
    ps = np.linspace(box.phi_min, box.phi_max, 40)
    assert np.all(curves.xi_u(vs) >= curves.xi_l(vs) - 1e-12)
    assert np.all(curves.eta_u(ps) >= curves.eta_l(ps) - 1e-12)
    # envelopes dominate the 2D maps on the box (sampled)
    rng = np.random.default_rng(3)
    rv = rng.uniform(box.v_min, box.v_max, 1000)
    rp = rng.uniform(box.phi_min, box.phi_max, 1000)
    f1, g1 = curves.f1, curves.g1
    assert np.all(f1(rv, rp) <= curves.xi_u(rv) + 1e-6)
    assert np.all(f1(rv, rp) >= curves.xi_l(rv) - 1e-6)
    assert np.all(g1(rv, rp) <= curves.eta_u(rp) + 1e-6)
    assert np.all(g1(rv, rp) >= curves.eta_l(rp) - 1e-6)


def test_degenerate_phase_box_collapses_xi():
    f1 = _linear_poly2d(0.5, 0.3, -0.2)
    g1 = _linear_poly2d(0.3, 0.1, 0.5)
    box = DomainBox(0.7, 1.0, 0.4, 0.4)
    curves = BoundCurves(box=box, d=0.3, f1=f1, g1=g1)
    vs = np.linspace(0.7, 1.0, 9)
    assert np.allclose(curves.xi_u(vs), curves.xi_l(vs))


def test_wcs_step_constant_curves():
    # f1 linear in phi only: xi_U and xi_L are distinct constants in v
    f1 = _linear_poly2d(0.5, 0.0, -0.2)
    g1 = _linear_poly2d(0.3, 0.0, 0.4)
    box = DomainBox(0.0, 1.0, 0.0, 1.0)
    curves = BoundCurves(box=box, d=0.3, f1=f1, g1=g1)
    rec = wcs_step(curves, (0.0, 1.0), (0.0, 1.0))
    assert rec.interval_v == (pytest.approx(0.3), pytest.approx(0.5))
    assert rec.interval_phi == (pytest.approx(0.3), pytest.approx(0.7))


def test_one_step_conservativeness(table):
    box = r1_plus("FP")
    curves = build_bound_curves(box, 0.35, table)
    rec = wcs_step(curves, (box.v_min, box.v_max), (box.phi_min, box.phi_max))
    rng = np.random.default_rng(5)
    rv = rng.uniform(box.v_min, box.v_max, 400)
    rp = rng.uniform(box.phi_min, box.phi_max, 400)
    img_v = curves.f1(rv, rp)
    img_p = curves.g1(rv, rp)
    assert np.all(img_v >= rec.interval_v[0] - 1e-9)
    assert np.all(img_v <= rec.interval_v[1] + 1e-9)
    assert np.all(img_p >= rec.interval_phi[0] - 1e-9)
    assert np.all(img_p <= rec.interval_phi[1] + 1e-9)


def test_generic_cobweb_matches_wcs_for_decreasing_curves():
    # strictly decreasing branches: the generic tail equals the WCS interval
    f1 = _linear_poly2d(1.2, -0.5, -0.1)
    g1 = _linear_poly2d(1.0, -0.1, -0.5)
    box = DomainBox(0.2, 1.0, 0.2, 1.0)
    curves = BoundCurves(box=box, d=0.3, f1=f1, g1=g1)
    hist = iterate_wcs(curves)
    orbit, extrema = generic_cobweb(curves, (0.5, 0.5), steps=400)
    assert extrema[0] == pytest.approx(hist.final.interval_v[0], abs=1e-6)
    assert extrema[1] == pytest.approx(hist.final.interval_v[1], abs=1e-6)


def test_generic_cobweb_period_two_from_cycle_point():
    f1 = _linear_poly2d(1.2, -0.5, -0.1)
    g1 = _linear_poly2d(1.0, -0.1, -0.5)
    box = DomainBox(0.2, 1.0, 0.2, 1.0)
    curves = BoundCurves(box=box, d=0.3, f1=f1, g1=g1)
    # starting at the fixed point of xi_L(xi_U(.)) (upper branch applied
    # first) makes the orbit exactly period 2
    xi_u, xi_l = curves.xi_u, curves.xi_l
    v = 0.6
    for _ in range(200):
        v = xi_l(xi_u(v))
    phi = 0.5
    for _ in range(200):
        phi = curves.eta_l(curves.eta_u(phi))
    orbit, _ = generic_cobweb(curves, (v, phi), steps=50)
    vs = orbit[:, 0]
    assert np.allclose(vs[::2], vs[0], atol=1e-9)
    assert np.allclose(vs[1::2], xi_u(vs[0]), atol=1e-9)


def test_update_region_contracts_fp(table):
    box = r1_plus("FP")
    curves = build_bound_curves(box, 0.35, table)
    new_box, hist = update_region(curves, box)
    assert hist.converged
    assert new_box.index == 2
    assert new_box.v_min > box.v_min and new_box.v_max < box.v_max
    assert new_box.phi_min > box.phi_min and new_box.phi_max < box.phi_max
    # the paper's first-update velocity interval is reproduced closely
    assert new_box.v_min == pytest.approx(0.771, abs=0.01)
    assert new_box.v_max == pytest.approx(0.909, abs=0.01)


def test_iterate_updates_fp(table):
    rep = iterate_updates("FP", table=table)
    assert not rep.escaped
    assert rep.statement_case == STATEMENT_PART1
    widths = rep.widths_table()
    assert np.all(np.diff(widths[:, 1]) <= 1e-12)  # v widths non-increasing
    assert np.all(np.diff(widths[:, 2]) <= 1e-12)
    final = rep.final_box
    assert final.widths[0] < 1e-2 and final.widths[1] < 1e-2
    # the composite fixed point lies inside every update's box
    from vipair.composite import CompositeMap

    v, phi, _ = CompositeMap(table=table, d=0.35).iterate(0.75, 0.4, 400)
    for box in rep.boxes:
        assert box.contains(v[-1], phi[-1], slack=1e-3)
    cyc = rep.two_cycle
    assert cyc is not None
    assert cyc.p_v <= cyc.q_v and cyc.p_phi <= cyc.q_phi
    assert abs(cyc.slope_v) < 1 and abs(cyc.slope_phi) < 1


def test_iterate_updates_pd_cd_escape(table):
    """The refitted region-1 maps leave the published trust region on the
    wider period-doubled and chaotic boxes; the pipeline reports the escape
    instead of iterating on extrapolated values."""
    with pytest.warns(EscapedBox):
        pd = iterate_updates("PD", table=table)
    assert pd.escaped
    with pytest.warns(EscapedBox):
        cd = iterate_updates("CD", table=table)
    assert cd.escaped
    assert cd.statement_case == STATEMENT_PART2


def test_second_iterate_composition(table, rng):
    composed, p_v, q_v, slope = second_iterate_v(0.35, 0.2, PI / 3, table,
                                                 box_v=(0.6, 1.0))
    assert composed.degree == 9
    f1 = table.coeffs_for(Region.R1, 0.35)["v"]
    inner = f1.partial_phi(PI / 3)
    outer = f1.partial_phi(0.2)
    for v in rng.uniform(0.6, 1.0, 1000):
        assert composed(float(v)) == pytest.approx(outer(inner(float(v))), abs=1e-10)
    assert p_v <= q_v
    assert abs(slope) < 1


def test_second_iterate_v_near_composite_fixed_point(table):
    rep = iterate_updates("FP", table=table)
    fb = rep.final_box
    _, p_v, q_v, _ = second_iterate_v(0.35, fb.phi_min, fb.phi_max, table,
                                      box_v=(fb.v_min - 0.05, fb.v_max + 0.05))
    assert p_v == pytest.approx(fb.v_min, abs=5e-3)
    assert q_v == pytest.approx(fb.v_max, abs=5e-3)


def test_second_iterate_phase_constant_envelopes():
    f1 = _linear_poly2d(0.5, 0.0, -0.2)
    g1 = _linear_poly2d(0.3, 0.4, 0.0)   # eta_U = 0.7, eta_L = 0.3 constants
    box = DomainBox(0.0, 1.0, 0.0, 1.0)
    curves = BoundCurves(box=box, d=0.3, f1=f1, g1=g1)
    p_phi, q_phi, slope = second_iterate_phase(curves)
    assert p_phi == pytest.approx(0.3, abs=1e-6)
    assert q_phi == pytest.approx(0.7, abs=1e-6)
    assert abs(slope) < 1e-6


def test_statement_cases(table):
    rep = iterate_updates("FP", table=table)
    assert statement61_case(rep.histories[-1]) == STATEMENT_PART1
    # decreasing curves contracting into the box interior keep the
    # extremizers excluded at every step
    f1 = _linear_poly2d(0.7, -0.2, -0.1)
    g1 = _linear_poly2d(0.7, -0.1, -0.2)
    curves = BoundCurves(box=DomainBox(0.0, 1.0, 0.0, 1.0), d=0.3, f1=f1, g1=g1)
    hist = iterate_wcs(curves)
    assert statement61_case(hist) == STATEMENT_PART1


def test_two_cycle_ordering_enforced():
    with pytest.raises(ValueError):
        TwoCycle(p_v=0.9, q_v=0.8, p_phi=0.3, q_phi=0.4, slope_v=0.1, slope_phi=0.1)


def test_domain_box_validation():
    with pytest.raises(ValueError):
        DomainBox(1.0, 0.9, 0.1, 0.2)
    box = DomainBox(0.5, 0.9, 0.1, 0.4)
    assert box.contains(0.7, 0.2)
    assert not box.contains(0.95, 0.2)
    assert box.widths == (pytest.approx(0.4), pytest.approx(0.3))
