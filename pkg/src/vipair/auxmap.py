"""Auxiliary 1D bound maps and worst-case-scenario interval iteration.

The 2D region-1 map (f1, g1) is bracketed by four 1D curves on a rectangular
box: xi_U/xi_L bound the velocity map over the box's phase interval, and
eta_U/eta_L bound the phase map over the box's velocity interval.  Iterating
the interval images of these curves (the worst-case-scenario step) bounds
every trajectory of the composite map that stays in the box; re-building the
curves on the converged interval and repeating contracts the box onto the
attracting domain, whose final size is set by a stable 2-cycle of the bound
curves.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .composite import CoeffTable, Poly1D, Poly2D, Region, load_table

PI = np.pi

ENVELOPE_GRID = 201          # tabulation points along each curve
INNER_GRID = 1001            # inner extremum grid; keeps envelope error ~1e-7
WCS_MAX_STEPS = 400
WCS_TOL = 1e-9
BISECT_TOL = 1e-12
ROOT_SCAN = 1e-3


class NoStableRoot(RuntimeError):
    pass


class NonContracting(Warning):
    """The updated box equals the previous one (fixed point of the update)."""


class EscapedBox(Warning):
    """A generic-cobweb iterate left the source box."""


@dataclass(frozen=True)
class DomainBox:
    """Rectangular state-space region [v_min, v_max] x [phi_min, phi_max]."""

    v_min: float
    v_max: float
    phi_min: float
    phi_max: float
    index: int = 1               # update counter N; the initial region is N=1

    def __post_init__(self):
        if self.v_min > self.v_max or self.phi_min > self.phi_max:
            raise ValueError(f"empty box {self}")

    @property
    def widths(self) -> tuple[float, float]:
        return self.v_max - self.v_min, self.phi_max - self.phi_min

    def contains(self, v: float, phi: float, slack: float = 0.0) -> bool:
        return (self.v_min - slack <= v <= self.v_max + slack
                and self.phi_min - slack <= phi <= self.phi_max + slack)

    def as_tuple(self):
        return self.v_min, self.v_max, self.phi_min, self.phi_max


CASE_D = {"FP": 0.35, "PD": 0.30, "CD": 0.26}
CASE_UPDATES = {"FP": 11, "PD": 11, "CD": 6}

_R1_PLUS = {
    "FP": (0.70, 1.0, 0.20, PI / 3),
    "PD": (0.65, 1.0, 0.13, PI / 3),
    "CD": (0.64, 1.0, 0.08, PI / 3),
}


def r1_plus(case: str) -> DomainBox:
    """The enlarged region-1 box anchoring the auxiliary construction."""
    if case not in _R1_PLUS:
        raise ValueError(f"case must be one of {sorted(_R1_PLUS)}, got {case!r}")
    return DomainBox(*_R1_PLUS[case], index=1)


@dataclass
class BoundCurves:
    """Upper/lower bound curves of (f1, g1) on a source box.

    xi branches are closed-form partial evaluations of f1 at the box's phase
    endpoints when the f1 family does not cross in v on the box (checked by
    sampling); otherwise both xi branches fall back to sampled envelopes.
    eta branches are always sampled envelopes: extrema of g1 over the box's
    v-interval, tabulated on a phase grid but evaluated exactly on demand.
    """

    box: DomainBox
    d: float
    f1: Poly2D
    g1: Poly2D
    xi_closed_form: bool = True
    grid: int = ENVELOPE_GRID
    inner_grid: int = INNER_GRID
    crossing_detected: bool = False

    def __post_init__(self):
        self._v_src = np.linspace(self.box.v_min, self.box.v_max, self.inner_grid)
        self._phi_src = np.linspace(self.box.phi_min, self.box.phi_max, self.inner_grid)
        self._v_tab = np.linspace(self.box.v_min, self.box.v_max, self.grid)
        self._phi_tab = np.linspace(self.box.phi_min, self.box.phi_max, self.grid)
        if self.xi_closed_form:
            lo = self.f1.partial_phi(self.box.phi_min)
            hi = self.f1.partial_phi(self.box.phi_max)
            # orientation: whichever branch dominates on the box is the upper one
            if np.all(lo(self._v_src) >= hi(self._v_src)):
                self._xi_u_poly, self._xi_l_poly = lo, hi
            elif np.all(hi(self._v_src) >= lo(self._v_src)):
                self._xi_u_poly, self._xi_l_poly = hi, lo
            else:
                self.crossing_detected = True
                self.xi_closed_form = False
        # tabulated envelopes (exports/diagnostics); evaluation is exact
        self.eta_u_table = self.eta_u(self._phi_tab)
        self.eta_l_table = self.eta_l(self._phi_tab)
        self.xi_u_table = self.xi_u(self._v_tab)
        self.xi_l_table = self.xi_l(self._v_tab)

    @property
    def v_grid(self) -> np.ndarray:
        return self._v_tab

    @property
    def phi_grid(self) -> np.ndarray:
        return self._phi_tab

    @property
    def xi_u_poly(self) -> Poly1D:
        if not self.xi_closed_form:
            raise ValueError("xi branches are sampled envelopes (f1 family crosses)")
        return self._xi_u_poly

    @property
    def xi_l_poly(self) -> Poly1D:
        if not self.xi_closed_form:
            raise ValueError("xi branches are sampled envelopes (f1 family crosses)")
        return self._xi_l_poly

    def xi_u(self, v):
        if self.xi_closed_form:
            return self._xi_u_poly(v)
        return self._xi_env(v, np.max)

    def xi_l(self, v):
        if self.xi_closed_form:
            return self._xi_l_poly(v)
        return self._xi_env(v, np.min)

    def _xi_env(self, v, reducer):
        v = np.atleast_1d(np.asarray(v, dtype=float))
        vals = self.f1(v[:, None], self._phi_src[None, :])
        out = reducer(vals, axis=1)
        return out if out.shape != (1,) else float(out[0])

    def eta_u(self, phi):
        return self._eta_env(phi, np.max)

    def eta_l(self, phi):
        return self._eta_env(phi, np.min)

    def _eta_env(self, phi, reducer):
        phi = np.atleast_1d(np.asarray(phi, dtype=float))
        vals = self.g1(self._v_src[None, :], phi[:, None])
        out = reducer(vals, axis=1)
        return out if out.shape != (1,) else float(out[0])


def build_bound_curves(box: DomainBox, d: float, table: CoeffTable | None = None,
                       grid: int = ENVELOPE_GRID) -> BoundCurves:
    """Bound curves of the region-1 maps on a box at dimensionless length d."""
    table = table if table is not None else load_table()
    maps = table.coeffs_for(Region.R1, d)
    return BoundCurves(box=box, d=d, f1=maps["v"], g1=maps["phi"], grid=grid)


@dataclass(frozen=True)
class WcsRecord:
    """One interval-iteration step with the extremizer locations."""

    interval_v: tuple[float, float]
    interval_phi: tuple[float, float]
    argmax_xi_u: float
    argmin_xi_l: float
    argmax_eta_u: float
    argmin_eta_l: float


def _clip_to(interval, lo, hi):
    """Intersect an interval with [lo, hi]; collapse to the closer edge if disjoint."""
    a, b = max(interval[0], lo), min(interval[1], hi)
    if a > b:
        edge = lo if interval[1] < lo else hi
        return edge, edge
    return a, b


def wcs_step(curves: BoundCurves, interval_v, interval_phi,
             grid: int = ENVELOPE_GRID) -> WcsRecord:
    """One worst-case-scenario step: extremal images of the current intervals.

    The bound curves exist on the source box only, so extremization runs over
    the intervals intersected with the box; the image values themselves may
    leave the box (the next update rebuilds the curves there).
    """
    box = curves.box
    iv = _clip_to(interval_v, box.v_min, box.v_max)
    ip = _clip_to(interval_phi, box.phi_min, box.phi_max)

    vv = np.linspace(iv[0], iv[1], grid)
    up = curves.xi_u(vv)
    lo = curves.xi_l(vv)
    new_v = (float(np.min(lo)), float(np.max(up)))
    arg_u, arg_l = float(vv[np.argmax(up)]), float(vv[np.argmin(lo)])

    pp = np.linspace(ip[0], ip[1], grid)
    e_up = curves.eta_u(pp)
    e_lo = curves.eta_l(pp)
    new_p = (float(np.min(e_lo)), float(np.max(e_up)))
    parg_u, parg_l = float(pp[np.argmax(e_up)]), float(pp[np.argmin(e_lo)])
    return WcsRecord(interval_v=new_v, interval_phi=new_p,
                     argmax_xi_u=arg_u, argmin_xi_l=arg_l,
                     argmax_eta_u=parg_u, argmin_eta_l=parg_l)


@dataclass
class WcsHistory:
    records: list[WcsRecord] = field(default_factory=list)
    converged: bool = False

    @property
    def final(self) -> WcsRecord:
        return self.records[-1]


def iterate_wcs(curves: BoundCurves, *, max_steps: int = WCS_MAX_STEPS,
                tol: float = WCS_TOL, grid: int = ENVELOPE_GRID) -> WcsHistory:
    """Iterate the WCS step from the full source box until the interval pair
    settles (change below tol) or the step budget runs out."""
    iv = (curves.box.v_min, curves.box.v_max)
    ip = (curves.box.phi_min, curves.box.phi_max)
    history = WcsHistory()
    for _ in range(max_steps):
        rec = wcs_step(curves, iv, ip, grid=grid)
        history.records.append(rec)
        change = max(abs(rec.interval_v[0] - iv[0]), abs(rec.interval_v[1] - iv[1]),
                     abs(rec.interval_phi[0] - ip[0]), abs(rec.interval_phi[1] - ip[1]))
        iv, ip = rec.interval_v, rec.interval_phi
        if not (np.isfinite(iv).all() and np.isfinite(ip).all()):
            raise FloatingPointError("WCS iteration diverged (non-finite interval)")
        if change < tol:
            history.converged = True
            break
    return history


def generic_cobweb(curves: BoundCurves, start: tuple[float, float], steps: int = WCS_MAX_STEPS):
    """Alternate upper and lower branches from a point; returns the orbit and
    the extrema of its final 10%.

    Escaping the source box is reported through an EscapedBox warning, not an
    error (transients may enter from outside region 1).
    """
    v, phi = start
    orbit = np.empty((steps + 1, 2))
    orbit[0] = (v, phi)
    escaped = False
    for k in range(steps):
        if k % 2 == 0:
            v, phi = curves.xi_u(v), curves.eta_u(phi)
        else:
            v, phi = curves.xi_l(v), curves.eta_l(phi)
        orbit[k + 1] = (v, phi)
        if not curves.box.contains(v, phi, slack=0.5):
            escaped = True
    if escaped:
        warnings.warn("generic cobweb left the source box", EscapedBox, stacklevel=2)
    tail = orbit[-max(steps // 10, 2):]
    extrema = (tail[:, 0].min(), tail[:, 0].max(), tail[:, 1].min(), tail[:, 1].max())
    return orbit, extrema


def update_region(curves: BoundCurves, box: DomainBox, *,
                  max_steps: int = WCS_MAX_STEPS, tol: float = WCS_TOL) -> tuple[DomainBox, WcsHistory]:
    """One update: run the WCS iteration to its limit and adopt the limiting
    intervals as the next box."""
    history = iterate_wcs(curves, max_steps=max_steps, tol=tol)
    rec = history.final
    new_box = DomainBox(rec.interval_v[0], rec.interval_v[1],
                        rec.interval_phi[0], rec.interval_phi[1], index=box.index + 1)
    if (abs(new_box.v_min - box.v_min) < tol and abs(new_box.v_max - box.v_max) < tol
            and abs(new_box.phi_min - box.phi_min) < tol
            and abs(new_box.phi_max - box.phi_max) < tol):
        warnings.warn("update produced the same box (non-contracting)",
                      NonContracting, stacklevel=2)
    return new_box, history


@dataclass(frozen=True)
class TwoCycle:
    """Alternating 2-cycle of the bound maps: p <= q per coordinate, with the
    second-iterate slopes at the lower fixed values."""

    p_v: float
    q_v: float
    p_phi: float
    q_phi: float
    slope_v: float
    slope_phi: float

    def __post_init__(self):
        if self.p_v > self.q_v or self.p_phi > self.q_phi:
            raise ValueError(f"cycle values out of order: {self}")


def second_iterate_v(d: float, phi_min: float, phi_max: float,
                     table: CoeffTable | None = None,
                     box_v: tuple[float, float] | None = None):
    """Closed-form second-iterate velocity map and its stable 2-cycle.

    Composes f1 at the two phase endpoints into a degree-9 polynomial by
    exact coefficient arithmetic, locates the stable fixed point inside
    box_v (defaulting to the full real axis scan window), and returns
    (polynomial, p_v, q_v, slope at the fixed point).
    """
    table = table if table is not None else load_table()
    f1 = table.coeffs_for(Region.R1, d)["v"]
    inner = f1.partial_phi(phi_max)      # lower branch applied first
    outer = f1.partial_phi(phi_min)
    composed = Poly1D("v", _compose(outer.coeffs, inner.coeffs))
    lo, hi = box_v if box_v is not None else (0.0, 1.5)
    root, slope = _stable_fixed_point_poly(composed, lo, hi)
    partner = float(inner(root))
    p_v, q_v = min(root, partner), max(root, partner)
    return composed, p_v, q_v, slope


def _compose(outer: np.ndarray, inner: np.ndarray) -> np.ndarray:
    """Coefficients (ascending) of outer(inner(x))."""
    P = np.polynomial.polynomial
    acc = np.array([outer[-1]])
    for c in outer[-2::-1]:
        acc = P.polyadd(P.polymul(acc, inner), [c])
    return acc


def _stable_fixed_point_poly(poly: Poly1D, lo: float, hi: float):
    """Stable root of poly(x) = x in [lo, hi] by sign-bracketing + bisection."""
    deriv = poly.derivative()
    g = lambda x: poly(x) - x
    xs = np.arange(lo, hi + ROOT_SCAN, ROOT_SCAN)
    vals = g(xs)
    roots = []
    for i in np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0):
        a, b = xs[i], xs[i + 1]
        ga = g(a)
        for _ in range(60):
            m = 0.5 * (a + b)
            gm = g(m)
            if ga * gm <= 0:
                b = m
            else:
                a, ga = m, gm
            if b - a < BISECT_TOL:
                break
        x = 0.5 * (a + b)
        roots.append((x, float(deriv(x))))
    stable = [(x, s) for x, s in roots if abs(s) < 1.0]
    if not stable:
        raise NoStableRoot(f"no stable fixed point in [{lo}, {hi}] "
                           f"(found {[round(x, 4) for x, _ in roots]})")
    mid = 0.5 * (lo + hi)
    stable.sort(key=lambda xs_: abs(xs_[0] - mid))
    return stable[0]


def second_iterate_phase(curves: BoundCurves,
                         window: tuple[float, float] | None = None):
    """Stable 2-cycle of the sampled phase envelopes: p_phi from the
    composition eta_L(eta_U(.)), q_phi = eta_U(p_phi); slope by central
    difference."""
    lo, hi = window if window is not None else (curves.box.phi_min, curves.box.phi_max)
    comp = lambda x: curves.eta_l(curves.eta_u(np.asarray(x, dtype=float)))
    g = lambda x: comp(x) - np.asarray(x, dtype=float)
    xs = np.linspace(lo, hi, max(curves.grid, 2))
    vals = g(xs)
    candidates = []
    h = 1e-6 * max(hi - lo, 1.0)
    for i in np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0):
        a, b = xs[i], xs[i + 1]
        ga = float(g(a))
        for _ in range(60):
            m = 0.5 * (a + b)
            gm = float(g(m))
            if ga * gm <= 0:
                b = m
            else:
                a, ga = m, gm
            if b - a < BISECT_TOL:
                break
        x = 0.5 * (a + b)
        slope = float((comp(x + h) - comp(x - h)) / (2 * h))
        candidates.append((x, slope))
    stable = [(x, s) for x, s in candidates if abs(s) < 1.0]
    if not stable:
        raise NoStableRoot("no stable fixed point of eta_L(eta_U(.)) in the window")
    mid = 0.5 * (lo + hi)
    stable.sort(key=lambda xs_: abs(xs_[0] - mid))
    p_phi, slope = stable[0]
    q_phi = float(curves.eta_u(p_phi))
    return min(p_phi, q_phi), max(p_phi, q_phi), slope


STATEMENT_PART1 = "Part1"
STATEMENT_PART2 = "Part2"
STATEMENT_INDETERMINATE = "Indeterminate"


def statement61_case(history: WcsHistory, tol: float = WCS_TOL) -> str:
    """Which part of the attracting-domain statement the iteration satisfied.

    Part1: at every step that still moved the intervals, the extremizers of
    the bound curves fell outside the step's output intervals (so generic and
    WCS cobwebbing coincide).  Part2: the intervals stabilized exactly while
    the exclusion property failed.  Anything else is indeterminate.
    """
    if len(history.records) < 2:
        return STATEMENT_INDETERMINATE
    exclusion_ok = True
    stabilized = history.converged
    for k, rec in enumerate(history.records):
        if k and _same_interval(rec, history.records[k - 1], tol):
            break
        iv, ip = rec.interval_v, rec.interval_phi
        inside = (iv[0] <= rec.argmax_xi_u <= iv[1]) or (iv[0] <= rec.argmin_xi_l <= iv[1]) \
            or (ip[0] <= rec.argmax_eta_u <= ip[1]) or (ip[0] <= rec.argmin_eta_l <= ip[1])
        if inside:
            exclusion_ok = False
    if exclusion_ok:
        return STATEMENT_PART1
    if stabilized:
        return STATEMENT_PART2
    return STATEMENT_INDETERMINATE


def _same_interval(a: WcsRecord, b: WcsRecord, tol: float) -> bool:
    return (abs(a.interval_v[0] - b.interval_v[0]) < tol
            and abs(a.interval_v[1] - b.interval_v[1]) < tol
            and abs(a.interval_phi[0] - b.interval_phi[0]) < tol
            and abs(a.interval_phi[1] - b.interval_phi[1]) < tol)


@dataclass
class UpdateReport:
    """Full record of the iterated auxiliary-map updates for one case."""

    case: str
    d: float
    boxes: list[DomainBox]
    histories: list[WcsHistory]
    statement_case: str
    two_cycle: TwoCycle | None
    crossing_detected: bool
    escaped: bool = False        # an update left the map's trust region

    @property
    def final_box(self) -> DomainBox:
        return self.boxes[-1]

    def widths_table(self) -> np.ndarray:
        """Rows (N, v width, phi width) across the updates."""
        return np.array([(b.index, *b.widths) for b in self.boxes])


# Updated boxes may exceed the case box somewhat (the chaotic case does), but
# far outside it the fitted region-1 maps carry no information; an update
# whose box leaves this inflated trust region stops the sequence.
TRUST_MARGIN = 0.35


def _trust_region(case: str) -> tuple[float, float, float, float]:
    v_lo, v_hi, p_lo, p_hi = _R1_PLUS[case]
    dv = TRUST_MARGIN * (v_hi - v_lo)
    dp = TRUST_MARGIN * (p_hi - p_lo)
    return v_lo - dv, v_hi + dv, p_lo - dp, p_hi + dp


def _inside_trust(box: DomainBox, trust) -> bool:
    return (trust[0] <= box.v_min and box.v_max <= trust[1]
            and trust[2] <= box.phi_min and box.phi_max <= trust[3])


def iterate_updates(case: str, d: float | None = None, n_updates: int | None = None,
                    table: CoeffTable | None = None, *,
                    box: DomainBox | None = None,
                    max_steps: int = WCS_MAX_STEPS, tol: float = WCS_TOL) -> UpdateReport:
    """Repeated bound-curve construction and WCS convergence for one case.

    Starts from the case's enlarged region-1 box (or an explicit one),
    rebuilds the curves on each converged box, and stops after n_updates or
    when an update no longer moves the box.  The final box's 2-cycle is
    extracted from the last curves.
    """
    table = table if table is not None else load_table()
    d = CASE_D[case] if d is None else d
    n_updates = CASE_UPDATES.get(case, 11) if n_updates is None else n_updates
    current = box if box is not None else r1_plus(case)

    boxes = [current]
    histories: list[WcsHistory] = []
    crossing = False
    escaped = False
    last_curves = None
    trust = _trust_region(case) if case in _R1_PLUS else None
    for _ in range(n_updates - 1):
        curves = build_bound_curves(current, d, table)
        crossing = crossing or curves.crossing_detected
        last_curves = curves
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NonContracting)
            new_box, history = update_region(curves, current, max_steps=max_steps, tol=tol)
        histories.append(history)
        boxes.append(new_box)
        if trust is not None and not _inside_trust(new_box, trust):
            escaped = True
            warnings.warn(f"update {new_box.index} left the map's trust region; "
                          "stopping the update sequence", EscapedBox, stacklevel=2)
            break
        if _boxes_equal(new_box, current, tol):
            break
        current = new_box

    statement = statement61_case(histories[-1]) if histories else STATEMENT_INDETERMINATE
    cycle = None
    if last_curves is not None and not escaped:
        try:
            fb = boxes[-1]
            _, p_v, q_v, slope_v = second_iterate_v(
                d, last_curves.box.phi_min, last_curves.box.phi_max, table,
                box_v=(fb.v_min - 0.05, fb.v_max + 0.05))
            p_phi, q_phi, slope_p = second_iterate_phase(
                last_curves, window=(fb.phi_min - 0.05, fb.phi_max + 0.05))
            cycle = TwoCycle(p_v=p_v, q_v=q_v, p_phi=p_phi, q_phi=q_phi,
                             slope_v=slope_v, slope_phi=slope_p)
        except (NoStableRoot, ValueError):
            cycle = None
    return UpdateReport(case=case, d=d, boxes=boxes, histories=histories,
                        statement_case=statement, two_cycle=cycle,
                        crossing_detected=crossing, escaped=escaped)


def _boxes_equal(a: DomainBox, b: DomainBox, tol: float) -> bool:
    return (abs(a.v_min - b.v_min) < tol and abs(a.v_max - b.v_max) < tol
            and abs(a.phi_min - b.phi_min) < tol and abs(a.phi_max - b.phi_max) < tol)
