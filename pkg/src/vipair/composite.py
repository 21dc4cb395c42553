"""Piecewise-polynomial composite return map over regions R1..R5 with reset.

Dispatch is the ordered if-chain used to program the map: reset for phases
outside [0, pi], then R1 (2D cubic/quadratic map on its box), R2/R4/R5
(separable 1D maps), and R3 (2D map on the remaining low-velocity triangle;
the final branch is a catch-all so dispatch is total).

Coefficient tables store every coefficient as a polynomial in the
dimensionless length d (ascending powers); two sets ship with the package:

* ``calibrated`` -- regenerated from the exact event-driven dynamics by the
  in-repo fitting pipeline; the default for all dynamics.
* ``supplement`` -- a verbatim transcription of the published tables, kept
  for reference and comparison.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path

import numpy as np

from .fitting import design_matrix, fit_poly1d, fit_poly2d, poly2d_exponents

PI = np.pi

D_RANGE = (0.26, 0.35)
PHI_RESET = 1.2

R1_BOX = (0.63, 0.94, 0.15, 0.45)  # v_min, v_max, phi_min, phi_max


class Region(Enum):
    R1 = "R1"
    R2 = "R2"
    R3 = "R3"
    R4 = "R4"
    R5 = "R5"
    RESET = "RESET"


def region_of(v: float, phi: float) -> Region:
    """Dispatch a state to its region; total on all real (v, phi)."""
    if phi > PI or phi < 0.0:
        return Region.RESET
    if R1_BOX[0] <= v <= R1_BOX[1] and R1_BOX[2] <= phi <= R1_BOX[3]:
        return Region.R1
    if v > 0.63 - 0.53 * phi and v > 0.55:
        return Region.R2
    if v > 0.63 - 0.53 * phi and 1.1 < phi < 2.5 and v < 0.55:
        return Region.R4
    if 2.5 < phi < PI and v < 0.55:
        return Region.R5
    return Region.R3


@dataclass(frozen=True)
class Poly2D:
    """Bivariate polynomial sum(c * phi^i * v^j) over fixed exponent pairs."""

    exponents: tuple[tuple[int, int], ...]
    coeffs: np.ndarray

    def __call__(self, v, phi):
        v = np.asarray(v, dtype=float)
        phi = np.asarray(phi, dtype=float)
        out = np.zeros(np.broadcast(v, phi).shape)
        for (i, j), c in zip(self.exponents, self.coeffs):
            out += c * phi**i * v**j
        if out.ndim == 0:
            return float(out)
        return out

    def partial_phi(self, phi0: float) -> "Poly1D":
        """Collapse phi to a constant, leaving an exact polynomial in v."""
        deg_v = max(j for _, j in self.exponents)
        c = np.zeros(deg_v + 1)
        for (i, j), coeff in zip(self.exponents, self.coeffs):
            c[j] += coeff * phi0**i
        return Poly1D(variable="v", coeffs=c)

    def partial_v(self, v0: float) -> "Poly1D":
        deg_p = max(i for i, _ in self.exponents)
        c = np.zeros(deg_p + 1)
        for (i, j), coeff in zip(self.exponents, self.coeffs):
            c[i] += coeff * v0**j
        return Poly1D(variable="phi", coeffs=c)


@dataclass(frozen=True)
class Poly1D:
    """Single-variable polynomial, coefficients ascending; optional |.| wrapper."""

    variable: str                 # "v" or "phi"
    coeffs: np.ndarray
    absolute: bool = False

    def __call__(self, x):
        val = np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), self.coeffs)
        if self.absolute:
            val = np.abs(val)
        if np.ndim(x) == 0:
            return float(val)
        return val

    def derivative(self) -> "Poly1D":
        if self.absolute:
            raise ValueError("derivative undefined through the absolute-value wrapper")
        return Poly1D(self.variable, np.polynomial.polynomial.polyder(self.coeffs))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1


# Region map shapes: (target -> ("2d", deg_phi, deg_v) | ("1d", variable, degree, abs))
REGION_SHAPES = {
    Region.R1: {"v": ("2d", 2, 3), "phi": ("2d", 2, 3)},
    Region.R2: {"v": ("1d", "v", 5, False), "phi": ("1d", "phi", 5, False)},
    Region.R3: {"v": ("2d", 3, 5), "phi": ("2d", 4, 5)},
    Region.R4: {"v": ("1d", "v", 8, False), "phi": ("1d", "phi", 4, False)},
    Region.R5: {"v": ("1d", "v", 4, True), "phi": ("1d", "phi", 3, False)},
}


def _canonical_payload(regions_dict: dict) -> str:
    return json.dumps(regions_dict, sort_keys=True, separators=(",", ":"))


def table_checksum(regions_dict: dict) -> str:
    return "sha256:" + hashlib.sha256(_canonical_payload(regions_dict).encode()).hexdigest()


class CoeffTableError(ValueError):
    pass


@dataclass
class CoeffTable:
    """d-parameterized coefficient tables for the five region maps.

    Entries map region -> target ("v"/"phi") -> list of (exponent pair,
    d-polynomial ascending).  Exponent pairs are (phi power, v power);
    separable maps use pairs with a zero in the unused slot.
    """

    name: str
    d_range: tuple[float, float]
    entries: dict
    abs_flags: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, payload: dict, verify_checksum: bool = True) -> "CoeffTable":
        regions = payload["regions"]
        if verify_checksum:
            expected = payload.get("checksum")
            actual = table_checksum(regions)
            if expected != actual:
                raise CoeffTableError(
                    f"coefficient table {payload.get('name')!r} checksum mismatch: "
                    f"file says {expected}, content is {actual}")
        entries, abs_flags = {}, {}
        for rname, targets in regions.items():
            region = Region(rname)
            entries[region] = {}
            for tname, spec in targets.items():
                entries[region][tname] = [
                    (tuple(item["exponents"]), np.asarray(item["d_poly"], dtype=float))
                    for item in spec["terms"]
                ]
                abs_flags[(region, tname)] = bool(spec.get("absolute", False))
        return cls(name=payload["name"], d_range=tuple(payload["d_range"]),
                   entries=entries, abs_flags=abs_flags,
                   metadata=payload.get("metadata", {}))

    def to_dict(self) -> dict:
        regions = {}
        for region, targets in self.entries.items():
            regions[region.value] = {}
            for tname, terms in targets.items():
                regions[region.value][tname] = {
                    "absolute": self.abs_flags.get((region, tname), False),
                    "terms": [{"exponents": list(exp), "d_poly": list(map(float, poly))}
                              for exp, poly in terms],
                }
        return {"name": self.name, "d_range": list(self.d_range),
                "metadata": self.metadata, "regions": regions,
                "checksum": table_checksum(regions)}

    def _check_d(self, d: float):
        lo, hi = self.d_range
        if not lo - 1e-9 <= d <= hi + 1e-9:  # scan grids accumulate float noise
            warnings.warn(f"d={d} outside the calibrated range [{lo}, {hi}]; "
                          "extrapolating the coefficient polynomials", stacklevel=3)

    def coeffs_for(self, region: Region, d: float) -> dict:
        """Evaluate the d-polynomials of one region; {'v': map, 'phi': map}."""
        if region == Region.RESET:
            raise CoeffTableError("the reset branch has no coefficient table")
        self._check_d(d)
        out = {}
        for tname, terms in self.entries[region].items():
            exps = tuple(exp for exp, _ in terms)
            vals = np.array([np.polynomial.polynomial.polyval(d, poly) for _, poly in terms])
            shape = REGION_SHAPES[region][tname]
            if shape[0] == "2d":
                out[tname] = Poly2D(exponents=exps, coeffs=vals)
            else:
                _, variable, degree, _ = shape
                coeffs = np.zeros(degree + 1)
                for (i, j), val in zip(exps, vals):
                    power = j if variable == "v" else i
                    coeffs[power] += val
                out[tname] = Poly1D(variable=variable, coeffs=coeffs,
                                    absolute=self.abs_flags.get((region, tname), False))
        return out


def _data_path(name: str) -> Path:
    return Path(str(resources.files("vipair").joinpath("data", f"{name}_coefficients.json")))


def load_table(name: str = "calibrated") -> CoeffTable:
    """Load a shipped coefficient table ("calibrated" or "supplement") or a path."""
    path = Path(name)
    if not path.exists():
        path = _data_path(name)
    if not path.exists():
        raise FileNotFoundError(f"no coefficient table named {name!r} ({path})")
    return CoeffTable.from_dict(json.loads(path.read_text()))


@dataclass
class CompositeMap:
    """The composite map M: dispatch to a region map, or reset the phase."""

    table: CoeffTable
    d: float
    phi_reset: float = PHI_RESET

    def __post_init__(self):
        self._maps = {region: self.table.coeffs_for(region, self.d)
                      for region in REGION_SHAPES}

    def step(self, v: float, phi: float) -> tuple[float, float, Region]:
        region = region_of(v, phi)
        if region == Region.RESET:
            return v, self.phi_reset, region
        maps = self._maps[region]
        fmap, gmap = maps["v"], maps["phi"]
        if isinstance(fmap, Poly2D):
            return fmap(v, phi), gmap(v, phi), region
        return fmap(v), gmap(phi), region

    def iterate(self, v0: float, phi0: float, n_steps: int):
        """Trajectory of n_steps applications; arrays (v, phi, region codes).

        Region codes label the region used to map state k to k+1; the final
        state's code is the region it lies in.
        """
        v = np.empty(n_steps + 1)
        phi = np.empty(n_steps + 1)
        regions = np.empty(n_steps + 1, dtype=object)
        v[0], phi[0] = v0, phi0
        for k in range(n_steps):
            v[k + 1], phi[k + 1], regions[k] = self.step(v[k], phi[k])
        regions[n_steps] = region_of(v[n_steps], phi[n_steps])
        return v, phi, regions

    def r1_maps(self) -> dict:
        return self._maps[Region.R1]


def composite_step(v: float, phi: float, d: float,
                   table: CoeffTable | None = None) -> tuple[float, float]:
    """One application of the composite map at dimensionless length d."""
    table = table if table is not None else load_table()
    vn, pn, _ = CompositeMap(table=table, d=d).step(v, phi)
    return vn, pn


def iterate_composite(v0: float, phi0: float, d: float, n_steps: int,
                      table: CoeffTable | None = None):
    """Trajectory arrays (v, phi, regions) of the composite map."""
    table = table if table is not None else load_table()
    return CompositeMap(table=table, d=d).iterate(v0, phi0, n_steps)


@dataclass(frozen=True)
class AttractorClass:
    """Tail classification: kind "FP", "PD" (with period) or "CD"."""

    kind: str
    period: int

    def __str__(self):
        return self.kind if self.kind != "PD" else f"PD({self.period})"


class InsufficientData(ValueError):
    pass


def detect_attractor(v, phi, p_max: int = 16, tol: float = 1e-4,
                     tail_fraction: float = 0.1) -> AttractorClass:
    """Classify the tail of a trajectory as FP, PD(p) or CD.

    FP: the last tail_fraction of states repeat with period 1 within tol
    (sup-norm over both coordinates); PD(p): smallest p <= p_max that
    matches; CD: no period matches.
    """
    v = np.asarray(v, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if len(v) < 4 * p_max:
        raise InsufficientData(f"need at least {4 * p_max} states, got {len(v)}")
    n_tail = max(int(len(v) * tail_fraction), 2 * p_max)
    tv, tp = v[-n_tail:], phi[-n_tail:]
    for period in range(1, p_max + 1):
        dv = np.abs(tv[period:] - tv[:-period])
        dp = np.abs(tp[period:] - tp[:-period])
        if dv.max() < tol and dp.max() < tol:
            return AttractorClass(kind="FP" if period == 1 else "PD", period=period)
    return AttractorClass(kind="CD", period=0)


def fit_region_maps(surface, region: Region, *, delta: float | None = None,
                    deg_phi: int | None = None, deg_v: int | None = None,
                    curve_fixed_phi: float | None = None,
                    curve_fixed_v: float | None = None,
                    degree_v: int | None = None, degree_phi: int | None = None):
    """Refit one region's maps from a swept surface (see returnmap.sweep_surfaces).

    2D regions (R1, R3) fit all class-matching samples inside the region,
    optionally restricted by the diagonal-proximity ratio filter ``delta``.
    Separable regions fit representative curves: the v-map along the row of
    constant phase ``curve_fixed_phi`` and the phi-map along the column of
    constant velocity ``curve_fixed_v``.

    Returns {"v": map, "phi": map, "reports": {...}}.
    """
    from .returnmap import ReturnClass

    want = ReturnClass.BTB if region in (Region.R1, Region.R2, Region.R4) else ReturnClass.BB
    shape = REGION_SHAPES[region]
    if shape["v"][0] == "2d":
        vk, pk, vn, pn = surface.class_samples(want)
        in_region = np.array([region_of(v, p) == region for v, p in zip(vk, pk)])
        vk, pk, vn, pn = vk[in_region], pk[in_region], vn[in_region], pn[in_region]
        if delta is not None:
            keep = _ratio_filter(vk, pk, vn, pn, delta)
            vk, pk, vn, pn = vk[keep], pk[keep], vn[keep], pn[keep]
        dphi_v, dv_v = (deg_phi, deg_v) if deg_phi is not None else shape["v"][1:3]
        dphi_g, dv_g = (deg_phi, deg_v) if deg_phi is not None else shape["phi"][1:3]
        cv, ev, rep_v = fit_poly2d(vk, pk, vn, dphi_v, dv_v)
        cp, ep, rep_p = fit_poly2d(vk, pk, pn, dphi_g, dv_g)
        return {"v": Poly2D(tuple(ev), cv), "phi": Poly2D(tuple(ep), cp),
                "reports": {"v": rep_v, "phi": rep_p}}

    if curve_fixed_phi is None or curve_fixed_v is None:
        raise ValueError(f"separable region {region.value} needs representative "
                         "curve_fixed_phi and curve_fixed_v")
    vk, pk, vn, pn = surface.class_samples(want)
    row = np.isclose(pk, curve_fixed_phi, atol=1e-9)
    col = np.isclose(vk, curve_fixed_v, atol=1e-9)
    deg_f = degree_v if degree_v is not None else shape["v"][2]
    deg_g = degree_phi if degree_phi is not None else shape["phi"][2]
    cf, rep_f = fit_poly1d(vk[row], vn[row], deg_f)
    cg, rep_g = fit_poly1d(pk[col], pn[col], deg_g)
    return {"v": Poly1D("v", cf, absolute=shape["v"][3]),
            "phi": Poly1D("phi", cg),
            "reports": {"v": rep_f, "phi": rep_g}}


def _ratio_filter(vk, pk, vn, pn, delta: float):
    with np.errstate(divide="ignore", invalid="ignore"):
        rv = np.abs(vn / vk)
        rp = np.abs(pn / pk)
    return (rv > 1.0 / delta) & (rv < delta) & (rp > 1.0 / delta) & (rp < delta)
