"""CSV/JSON artifact writers and plot-script emission.

Numbers serialize with 17 significant digits so every double round-trips;
plot scripts are plain gnuplot files referencing the data artifacts, with no
timestamps so identical runs produce identical bytes.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .analysis import BifurcationSample, CaseResult, ComparisonRecord
from .auxmap import UpdateReport
from .returnmap import SurfaceData

FLOAT_FMT = "%.17g"


def _fmt(x) -> str:
    if x is None:
        return ""
    x = float(x)
    if np.isnan(x):
        return "nan"
    return FLOAT_FMT % x


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj)}")


def write_json(path: Path, payload: dict):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=1, default=_json_default))
    return path


def write_surface_csv(path: Path, surface: SurfaceData):
    """Columns: v_k, phi_k, class, v_next, phi_next, n_intermediate."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["v_k", "phi_k", "class", "v_next", "phi_next", "n_intermediate"])
        for i in range(len(surface)):
            ok = not np.isnan(surface.v_out[i])
            w.writerow([
                _fmt(surface.v_in[i]), _fmt(surface.phi_in[i]),
                surface.klass[i].value,
                _fmt(surface.v_out[i]) if ok else "",
                _fmt(surface.phi_out[i]) if ok else "",
                int(surface.n_intermediate[i]),
            ])
    return path


def read_surface_csv(path: Path):
    """Back-load a surface CSV into plain arrays (round-trip check helper)."""
    rows = list(csv.DictReader(Path(path).open()))
    v = np.array([float(r["v_k"]) for r in rows])
    p = np.array([float(r["phi_k"]) for r in rows])
    k = np.array([r["class"] for r in rows], dtype=object)
    vo = np.array([float(r["v_next"]) if r["v_next"] else np.nan for r in rows])
    po = np.array([float(r["phi_next"]) if r["phi_next"] else np.nan for r in rows])
    n = np.array([int(r["n_intermediate"]) for r in rows])
    return v, p, k, vo, po, n


def write_surface_json(path: Path, surface: SurfaceData):
    payload = {
        "params": {
            "restitution": surface.params.restitution,
            "length": surface.params.length,
            "gravity_term": surface.params.gravity_term,
            "general_phase": surface.params.general_phase,
        },
        "grid": surface.metadata,
        "class_counts": {k.value: n for k, n in surface.class_counts().items()},
    }
    return write_json(path, payload)


def write_partition_csv(path: Path, labels: np.ndarray):
    """Label matrix raster, one grid row per line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        for row in labels:
            w.writerow(list(row))
    return path


def write_trajectory_csv(path: Path, v, phi, regions):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "v", "phi", "region"])
        for k, (a, b, r) in enumerate(zip(v, phi, regions)):
            w.writerow([k, _fmt(a), _fmt(b), getattr(r, "value", r)])
    return path


def write_bifurcation_csv(path: Path, samples: list[BifurcationSample]):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["d", "v", "phi", "classification"])
        for s in samples:
            label = str(s.classification) if s.classification else "GAP"
            if len(s.tail_v):
                for a, b in zip(s.tail_v, s.tail_phi):
                    w.writerow([_fmt(s.d), _fmt(a), _fmt(b), label])
            else:
                w.writerow([_fmt(s.d), "", "", label])
    return path


def write_comparison_csv(path: Path, records: list[ComparisonRecord]):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["d", "v0", "phi0", "k", "exact_v", "exact_phi",
                    "composite_v", "composite_phi", "region", "tail_distance"])
        for rec in records:
            n = min(len(rec.exact_v), len(rec.composite_v))
            for k in range(n):
                w.writerow([
                    _fmt(rec.d), _fmt(rec.v0), _fmt(rec.phi0), k,
                    _fmt(rec.exact_v[k]), _fmt(rec.exact_phi[k]),
                    _fmt(rec.composite_v[k]), _fmt(rec.composite_phi[k]),
                    getattr(rec.composite_regions[k], "value", rec.composite_regions[k]),
                    _fmt(rec.tail_distance),
                ])
    return path


def aux_report_payload(report: UpdateReport) -> dict:
    payload = {
        "case": report.case,
        "d": report.d,
        "statement": report.statement_case,
        "crossing_detected": report.crossing_detected,
        "escaped": report.escaped,
        "boxes": [
            {"N": b.index, "v": [b.v_min, b.v_max], "phi": [b.phi_min, b.phi_max],
             "widths": list(b.widths)}
            for b in report.boxes
        ],
    }
    if report.two_cycle:
        c = report.two_cycle
        payload["two_cycle"] = {
            "p_v": c.p_v, "q_v": c.q_v, "p_phi": c.p_phi, "q_phi": c.q_phi,
            "slope_v": c.slope_v, "slope_phi": c.slope_phi,
        }
    return payload


def write_aux_report(path: Path, report: UpdateReport):
    return write_json(path, aux_report_payload(report))


def write_widths_csv(path: Path, report: UpdateReport):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["N", "v_width", "phi_width"])
        for row in report.widths_table():
            w.writerow([int(row[0]), _fmt(row[1]), _fmt(row[2])])
    return path


def write_case_result(outdir: Path, result: CaseResult):
    """Trajectory CSV, aux report JSON, width table CSV and plot scripts."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    traj = write_trajectory_csv(outdir / "trajectory.csv", result.trajectory_v,
                                result.trajectory_phi, result.trajectory_regions)
    rep = write_aux_report(outdir / "aux_report.json", result.aux_report)
    widths = write_widths_csv(outdir / "widths.csv", result.aux_report)
    plots = [
        write_plot_script(outdir / "trajectory.gp", traj.name,
                          title=f"case {result.preset.name} trajectory",
                          columns=(2, 3), xlabel="v_k", ylabel="phi_k"),
        write_plot_script(outdir / "widths.gp", widths.name,
                          title=f"case {result.preset.name} box widths",
                          columns=(1, 2), xlabel="N", ylabel="width",
                          extra=["set logscale y"]),
    ]
    return [traj, rep, widths, *plots]


def write_plot_script(path: Path, data_file: str, *, title: str,
                      columns: tuple[int, int], xlabel: str, ylabel: str,
                      extra: list[str] | None = None, style: str = "points"):
    """A minimal gnuplot script next to its data artifact."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [
        f'set title "{title}"',
        f'set xlabel "{xlabel}"',
        f'set ylabel "{ylabel}"',
        "set datafile separator comma",
        *(extra or []),
        f'plot "{data_file}" every ::1 using {columns[0]}:{columns[1]} with {style} notitle',
    ]
    path.write_text("\n".join(lines) + "\n")
    return path
