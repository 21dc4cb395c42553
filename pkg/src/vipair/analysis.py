"""End-to-end experiment drivers: continuation bifurcation scans, exact-vs-
composite trajectory comparison, and the three case presets."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import auxmap
from .composite import AttractorClass, CoeffTable, CompositeMap, detect_attractor, load_table
from .core import NondimParams, baseline_params
from .returnmap import ReturnClass, first_return_B

SCAN_STEPS = 400
SCAN_DISCARD = 300
DEFAULT_SEED_STATE = (0.43, 0.26)


@dataclass(frozen=True)
class BifurcationSample:
    """Attractor tail at one d: distinct limiting (v, phi) values and class."""

    d: float
    tail_v: np.ndarray
    tail_phi: np.ndarray
    classification: AttractorClass | None   # None marks a gap (OTHER tail)


def _iterate_exact(v0: float, phi0: float, p: NondimParams, n_steps: int):
    v = np.empty(n_steps + 1)
    phi = np.empty(n_steps + 1)
    v[0], phi[0] = v0, phi0
    for k in range(n_steps):
        sample = first_return_B(v[k], phi[k], p)
        if sample.klass == ReturnClass.OTHER:
            return v[:k + 1], phi[:k + 1], False
        v[k + 1], phi[k + 1] = sample.v_out, sample.phi_out
    return v, phi, True


def bifurcation_scan(kind: str, d_from: float, d_to: float, step: float,
                     base: NondimParams | None = None,
                     table: CoeffTable | None = None, *,
                     seed: tuple[float, float] = DEFAULT_SEED_STATE,
                     n_steps: int = SCAN_STEPS, discard: int = SCAN_DISCARD
                     ) -> list[BifurcationSample]:
    """Continuation scan of the exact or composite map over a d range.

    The attracting state at each d seeds the next one; OTHER-classified
    tails are recorded as gaps and the seed falls back to the default.
    """
    if kind not in ("exact", "composite"):
        raise ValueError(f"kind must be 'exact' or 'composite', got {kind!r}")
    if step <= 0:
        raise ValueError("step must be positive")
    base = base if base is not None else baseline_params(d_from)
    if kind == "composite" and table is None:
        table = load_table()

    n_d = int(round(abs(d_to - d_from) / step)) + 1
    direction = 1.0 if d_to >= d_from else -1.0
    samples: list[BifurcationSample] = []
    state = seed
    for i in range(n_d):
        d = d_from + direction * i * step
        if kind == "exact":
            p = base.replace(length=d)
            v, phi, ok = _iterate_exact(state[0], state[1], p, n_steps)
        else:
            v, phi, _ = CompositeMap(table=table, d=d).iterate(state[0], state[1], n_steps)
            ok = np.isfinite(v).all() and np.isfinite(phi).all()
        if not ok or len(v) <= discard:
            samples.append(BifurcationSample(d=d, tail_v=np.empty(0),
                                             tail_phi=np.empty(0), classification=None))
            state = seed
            continue
        tail_v, tail_phi = v[discard:], phi[discard:]
        cls = detect_attractor(v, phi)
        samples.append(BifurcationSample(d=d, tail_v=tail_v, tail_phi=tail_phi,
                                         classification=cls))
        state = (float(v[-1]), float(phi[-1]))
    return samples


def first_period_doubling(samples: list[BifurcationSample]) -> float | None:
    """Largest d (in scan order) where the classification first becomes PD(2).

    Meaningful on decreasing-d scans starting on the FP branch.
    """
    seen_fp = False
    for s in samples:
        if s.classification is None:
            continue
        if s.classification.kind == "FP":
            seen_fp = True
        elif seen_fp and s.classification.kind == "PD" and s.classification.period == 2:
            return s.d
    return None


def hausdorff_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Symmetric Hausdorff distance between two point sets (rows = points)."""
    if not len(a) or not len(b):
        return float("nan")
    d2 = np.sum((a[:, None, :] - b[None, :, :]) ** 2, axis=2)
    return float(np.sqrt(max(d2.min(axis=1).max(), d2.min(axis=0).max())))


@dataclass(frozen=True)
class ComparisonRecord:
    """Paired exact/composite trajectories from one initial condition."""

    d: float
    v0: float
    phi0: float
    exact_v: np.ndarray
    exact_phi: np.ndarray
    composite_v: np.ndarray
    composite_phi: np.ndarray
    composite_regions: np.ndarray
    tail_distance: float


def compare_exact_vs_composite(initial_conditions, d: float,
                               base: NondimParams | None = None,
                               table: CoeffTable | None = None, *,
                               n_steps: int = SCAN_STEPS,
                               tail_fraction: float = 0.1) -> list[ComparisonRecord]:
    """Run both maps from shared initial conditions and measure the Hausdorff
    distance between their trajectory tails."""
    base = base if base is not None else baseline_params(d)
    p = base.replace(length=d)
    table = table if table is not None else load_table()
    cmap = CompositeMap(table=table, d=d)
    records = []
    n_tail = max(int(n_steps * tail_fraction), 2)
    for (v0, phi0) in initial_conditions:
        ev, ep, _ = _iterate_exact(v0, phi0, p, n_steps)
        cv, cp, regions = cmap.iterate(v0, phi0, n_steps)
        tail_a = np.column_stack([ev[-n_tail:], ep[-n_tail:]])
        tail_b = np.column_stack([cv[-n_tail:], cp[-n_tail:]])
        records.append(ComparisonRecord(
            d=d, v0=v0, phi0=phi0, exact_v=ev, exact_phi=ep,
            composite_v=cv, composite_phi=cp, composite_regions=regions,
            tail_distance=hausdorff_distance(tail_a, tail_b)))
    return records


@dataclass
class CasePreset:
    name: str
    d: float
    n_updates: int
    initial_condition: tuple[float, float] = (0.2, 0.1)


CASE_PRESETS = {
    "FP": CasePreset(name="FP", d=0.35, n_updates=11),
    "PD": CasePreset(name="PD", d=0.30, n_updates=11),
    "CD": CasePreset(name="CD", d=0.26, n_updates=6),
}


@dataclass
class CaseResult:
    """Bundled artifacts of one case run."""

    preset: CasePreset
    trajectory_v: np.ndarray
    trajectory_phi: np.ndarray
    trajectory_regions: np.ndarray
    classification: AttractorClass
    aux_report: auxmap.UpdateReport
    metadata: dict = field(default_factory=dict)


def run_case_preset(case: str, table: CoeffTable | None = None, *,
                    n_steps: int = SCAN_STEPS) -> CaseResult:
    """Composite trajectory plus the full auxiliary-domain update report for
    one of the named cases (FP, PD, CD)."""
    if case not in CASE_PRESETS:
        raise ValueError(f"case must be one of {sorted(CASE_PRESETS)}, got {case!r}")
    preset = CASE_PRESETS[case]
    table = table if table is not None else load_table()
    cmap = CompositeMap(table=table, d=preset.d)
    v, phi, regions = cmap.iterate(*preset.initial_condition, n_steps)
    cls = detect_attractor(v, phi)
    report = auxmap.iterate_updates(case, preset.d, preset.n_updates, table)
    return CaseResult(preset=preset, trajectory_v=v, trajectory_phi=phi,
                      trajectory_regions=regions, classification=cls,
                      aux_report=report,
                      metadata={"table": table.name, "n_steps": n_steps})
