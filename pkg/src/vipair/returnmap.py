"""First-return maps to the bottom wall and the surfaces they sweep out.

A return sample maps one bottom-wall impact state (v_k, phi_k) to the next
bottom-wall state, classified by the number of intervening top impacts:
0 -> BB, 1 -> BTB, 2 -> BTTB; anything else (more than two top impacts,
grazing, or no impact within the solver horizon) folds into OTHER with a
reason code.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .core import (
    PI,
    SIDE_B,
    SIDE_T,
    ImpactEvent,
    NondimParams,
    event_on_b,
    impact_phase,
    next_impact_batch,
)


class ReturnClass(Enum):
    BB = "BB"
    BTB = "BTB"
    BTTB = "BTTB"
    OTHER = "OTHER"


_CLASS_BY_TCOUNT = {0: ReturnClass.BB, 1: ReturnClass.BTB, 2: ReturnClass.BTTB}
_MAX_T_IMPACTS = 2

REASON_NONE = ""
REASON_MANY_T = "many_t_impacts"
REASON_GRAZING = "grazing"
REASON_NO_IMPACT = "no_impact_within_horizon"


@dataclass(frozen=True)
class ReturnSample:
    """One first-return map evaluation; outputs present unless class is OTHER."""

    v_in: float
    phi_in: float
    klass: ReturnClass
    v_out: float | None = None
    phi_out: float | None = None
    intermediate_events: tuple[ImpactEvent, ...] = ()
    reason: str = REASON_NONE


@dataclass(frozen=True)
class GridSpec:
    """Rectangular sweep grid; v nodes exclude the lower edge (no zero-velocity
    impacts), phase nodes include both ends."""

    n_v: int = 200
    n_phi: int = 200
    v_range: tuple[float, float] = (0.0, 1.0)
    phi_range: tuple[float, float] = (0.0, PI)

    def __post_init__(self):
        if self.n_v < 2 or self.n_phi < 2:
            raise ValueError("grid needs at least 2 nodes per axis")

    def v_nodes(self) -> np.ndarray:
        lo, hi = self.v_range
        return lo + (hi - lo) * np.arange(1, self.n_v + 1) / self.n_v

    def phi_nodes(self) -> np.ndarray:
        return np.linspace(self.phi_range[0], self.phi_range[1], self.n_phi)


EXTENDED_GRID = GridSpec(n_v=300, n_phi=400, v_range=(0.0, 1.5), phi_range=(0.0, 2 * PI))


@dataclass
class SurfaceData:
    """Sampled first-return map over a grid, stored column-wise.

    Arrays are flat with node (i_v, i_phi) at index i_v * n_phi + i_phi.
    t-impact intermediate states are kept as (time, velocity) pairs, NaN
    where absent.
    """

    params: NondimParams
    grid: GridSpec
    v_in: np.ndarray
    phi_in: np.ndarray
    klass: np.ndarray            # object array of ReturnClass
    v_out: np.ndarray            # NaN where class is OTHER
    phi_out: np.ndarray
    n_intermediate: np.ndarray
    t_events: np.ndarray         # (n, 2, 2): [k][0]=time, [k][1]=velocity
    reason: np.ndarray           # object array of str
    metadata: dict = field(default_factory=dict)

    @property
    def d(self) -> float:
        return self.params.length

    def __len__(self) -> int:
        return len(self.v_in)

    def sample(self, idx: int) -> ReturnSample:
        events = []
        for k in range(int(self.n_intermediate[idx])):
            t = self.t_events[idx, k, 0]
            v = self.t_events[idx, k, 1]
            events.append(ImpactEvent(side=SIDE_T, time=float(t), velocity_in=float(v),
                                      phase=float(impact_phase(t, self.params.general_phase))))
        out_ok = self.klass[idx] != ReturnClass.OTHER
        return ReturnSample(
            v_in=float(self.v_in[idx]), phi_in=float(self.phi_in[idx]),
            klass=self.klass[idx],
            v_out=float(self.v_out[idx]) if out_ok else None,
            phi_out=float(self.phi_out[idx]) if out_ok else None,
            intermediate_events=tuple(events), reason=str(self.reason[idx]))

    def class_samples(self, klass: ReturnClass):
        """Arrays (v_in, phi_in, v_out, phi_out) of one class."""
        m = np.array([k == klass for k in self.klass])
        return self.v_in[m], self.phi_in[m], self.v_out[m], self.phi_out[m]

    def class_counts(self) -> dict:
        out = {k: 0 for k in ReturnClass}
        for k in self.klass:
            out[k] += 1
        return out


def first_return_B(v: float, phi: float, p: NondimParams, *,
                   amplitude: float = 1.0) -> ReturnSample:
    """First return to the bottom wall from state (v, phi).

    Solver failures never raise; they classify the sample as OTHER with a
    reason code.
    """
    surface = _sweep_points(np.array([v]), np.array([phi]), p, amplitude=amplitude)
    return surface.sample(0)


def sweep_surfaces(grid: GridSpec, p: NondimParams, *,
                   amplitude: float = 1.0) -> SurfaceData:
    """Evaluate the first-return map on every grid node (deterministic)."""
    vs = grid.v_nodes()
    ps = grid.phi_nodes()
    V, P = np.meshgrid(vs, ps, indexing="ij")
    surface = _sweep_points(V.ravel(), P.ravel(), p, amplitude=amplitude)
    surface.grid = grid
    surface.metadata.update({"n_v": grid.n_v, "n_phi": grid.n_phi,
                             "v_range": list(grid.v_range),
                             "phi_range": list(grid.phi_range)})
    return surface


def _sweep_points(v_in, phi_in, p: NondimParams, *, amplitude: float = 1.0) -> SurfaceData:
    """Chain the batched event solver until each point returns to B or fails."""
    n = len(v_in)
    v_in = np.asarray(v_in, dtype=float)
    phi_in = np.asarray(phi_in, dtype=float)

    sides = np.ones(n, dtype=np.int8)
    times = (phi_in - p.general_phase) / PI
    vels = v_in.copy()

    klass = np.empty(n, dtype=object)
    reason = np.empty(n, dtype=object)
    reason[:] = REASON_NONE
    v_out = np.full(n, np.nan)
    phi_out = np.full(n, np.nan)
    n_inter = np.zeros(n, dtype=np.int64)
    t_events = np.full((n, 2, 2), np.nan)

    active = np.flatnonzero(v_in > 0)
    bad = np.flatnonzero(v_in <= 0)
    klass[bad] = ReturnClass.OTHER
    reason[bad] = REASON_NO_IMPACT

    legs = 0
    while active.size:
        s, t, v, st = next_impact_batch(sides[active], times[active], vels[active], p,
                                        amplitude=amplitude)
        no_hit = st == 1
        graze = st == 2
        idx = active
        klass[idx[no_hit]] = ReturnClass.OTHER
        reason[idx[no_hit]] = REASON_NO_IMPACT
        klass[idx[graze]] = ReturnClass.OTHER
        reason[idx[graze]] = REASON_GRAZING

        ok = st == 0
        back_b = ok & (s > 0)
        done = idx[back_b]
        v_out[done] = v[back_b]
        phi_out[done] = impact_phase(t[back_b], p.general_phase)
        for j in np.flatnonzero(back_b):
            klass[idx[j]] = _CLASS_BY_TCOUNT[int(n_inter[idx[j]])]

        to_t = ok & (s < 0)
        cont = idx[to_t]
        k = n_inter[cont]
        store = k < 2
        t_events[cont[store], k[store], 0] = t[to_t][store]
        t_events[cont[store], k[store], 1] = v[to_t][store]
        n_inter[cont] += 1
        overflow = n_inter[cont] > _MAX_T_IMPACTS
        klass[cont[overflow]] = ReturnClass.OTHER
        reason[cont[overflow]] = REASON_MANY_T

        cont = cont[~overflow]
        sides[cont] = -1
        times[cont] = t[to_t][~overflow]
        vels[cont] = v[to_t][~overflow]
        active = cont
        legs += 1
        if legs > _MAX_T_IMPACTS + 2:
            break

    grid = GridSpec(n_v=2, n_phi=2)  # placeholder for point sets; sweeps overwrite
    return SurfaceData(params=p, grid=grid, v_in=v_in, phi_in=phi_in, klass=klass,
                       v_out=v_out, phi_out=phi_out, n_intermediate=n_inter,
                       t_events=t_events, reason=reason)


def partition_by_class(surface: SurfaceData) -> np.ndarray:
    """Class-label raster over the grid, shape (n_v, n_phi), values 'BB'...'OTHER'."""
    labels = np.array([k.value for k in surface.klass], dtype=object)
    return labels.reshape(surface.grid.n_v, surface.grid.n_phi)


@dataclass(frozen=True)
class R1FilterResult:
    """Union of diagonal-proximate BTB states over a set of d values."""

    points: np.ndarray           # columns d, v, phi
    bounding_box: tuple[float, float, float, float]
    delta: float
    d_values: tuple[float, ...]


class EmptyFilterResult(UserWarning):
    pass


def r1_filter(d_values, delta: float, grid: GridSpec, base: NondimParams,
              surfaces: dict | None = None) -> R1FilterResult:
    """Diagonal-proximity filter defining region R1.

    Keeps BTB samples whose input/output ratios satisfy
    1/delta < |phi_out/phi_in| < delta and 1/delta < |v_out/v_in| < delta,
    unioned over the given d values; returns the point set and its
    axis-aligned bounding box.
    """
    import warnings as _warnings

    if delta <= 1.0:
        _warnings.warn("delta <= 1 keeps nothing (open interval collapses)",
                       EmptyFilterResult, stacklevel=2)
    rows = []
    for d in d_values:
        p = base.replace(length=float(d))
        surface = surfaces[d] if surfaces and d in surfaces else sweep_surfaces(grid, p)
        vk, pk, vn, pn = surface.class_samples(ReturnClass.BTB)
        with np.errstate(divide="ignore", invalid="ignore"):
            rv = np.abs(vn / vk)
            rp = np.abs(pn / pk)
        keep = (rv > 1 / delta) & (rv < delta) & (rp > 1 / delta) & (rp < delta)
        for v, ph in zip(vk[keep], pk[keep]):
            rows.append((float(d), float(v), float(ph)))
    points = np.array(rows) if rows else np.empty((0, 3))
    if not len(points):
        _warnings.warn(f"R1 filter with delta={delta} kept no points",
                       EmptyFilterResult, stacklevel=2)
        box = (np.nan,) * 4
    else:
        box = (points[:, 1].min(), points[:, 1].max(),
               points[:, 2].min(), points[:, 2].max())
    return R1FilterResult(points=points, bounding_box=box, delta=delta,
                          d_values=tuple(float(d) for d in d_values))


@dataclass(frozen=True)
class Strand:
    """One fixed-phase slice of the return surfaces, ordered by v_in."""

    phi: float
    v_in: np.ndarray
    v_out: np.ndarray
    phi_out: np.ndarray
    klass: np.ndarray
    near_diagonal: np.ndarray    # ratio test against both diagonals


def project_phase_planes(surface: SurfaceData, delta: float = 1.2) -> list[Strand]:
    """Per-phase strands for the v and phi phase-plane projections.

    The near-diagonal annotation applies the same ratio test as the R1
    filter, so "near the diagonal" means one thing throughout.
    """
    n_v, n_phi = surface.grid.n_v, surface.grid.n_phi
    v = surface.v_in.reshape(n_v, n_phi)
    vo = surface.v_out.reshape(n_v, n_phi)
    po = surface.phi_out.reshape(n_v, n_phi)
    kl = surface.klass.reshape(n_v, n_phi)
    phis = surface.grid.phi_nodes()
    strands = []
    for j, phi in enumerate(phis):
        with np.errstate(divide="ignore", invalid="ignore"):
            rv = np.abs(vo[:, j] / v[:, j])
            rp = np.abs(po[:, j] / phi) if phi != 0 else np.full(n_v, np.inf)
        near = (rv > 1 / delta) & (rv < delta) & (rp > 1 / delta) & (rp < delta)
        strands.append(Strand(phi=float(phi), v_in=v[:, j], v_out=vo[:, j],
                              phi_out=po[:, j], klass=kl[:, j],
                              near_diagonal=near))
    return strands
