"""Command-line surface: one subcommand per pipeline stage.

Every command writes CSV/JSON artifacts plus a gnuplot script where a
figure-style output exists, and exits nonzero with a machine-readable error
JSON on failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis, artifacts, auxmap
from .calibration import build_calibrated_table
from .composite import CompositeMap, Region, load_table, fit_region_maps
from .config import ConfigError, load_config
from .core import baseline_params
from .returnmap import GridSpec, ReturnClass, partition_by_class, r1_filter, sweep_surfaces

DEFAULT_OUT_ENV = "VIPAIR_OUT"


def _run_metadata(args, **extra) -> dict:
    from . import __version__

    meta = {"command": args.command, "version": __version__}
    for key in ("d", "grid", "table", "v0", "phi0", "steps", "delta",
                "d_from", "d_to", "step", "kind", "case", "name", "updates"):
        if hasattr(args, key) and getattr(args, key) is not None:
            meta[key] = getattr(args, key)
    meta.update(extra)
    return meta


def _outdir(args) -> Path:
    out = args.out or os.environ.get(DEFAULT_OUT_ENV, "runs")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _params(args):
    if getattr(args, "config", None):
        return load_config(args.config).params
    return baseline_params(args.d)


def _grid(spec: str, v_max: float = 1.0, phi_max: float = np.pi) -> GridSpec:
    try:
        n_v, n_phi = (int(tok) for tok in spec.lower().split("x"))
    except ValueError as err:
        raise ConfigError(f"grid must look like 200x200, got {spec!r}") from err
    return GridSpec(n_v=n_v, n_phi=n_phi, v_range=(0.0, v_max), phi_range=(0.0, phi_max))


def cmd_sweep(args) -> int:
    out = _outdir(args)
    grid = _grid(args.grid, v_max=args.v_max, phi_max=args.phi_max)
    surface = sweep_surfaces(grid, _params(args))
    artifacts.write_surface_csv(out / "surface.csv", surface)
    artifacts.write_surface_json(out / "surface.json", surface)
    artifacts.write_plot_script(out / "surface.gp", "surface.csv",
                                title=f"first-return surface d={surface.d}",
                                columns=(1, 2), xlabel="v_k", ylabel="phi_k")
    counts = {k.value: n for k, n in surface.class_counts().items()}
    print(json.dumps({"written": str(out / "surface.csv"), "classes": counts}))
    return 0


def cmd_partition(args) -> int:
    out = _outdir(args)
    grid = _grid(args.grid)
    surface = sweep_surfaces(grid, _params(args))
    labels = partition_by_class(surface)
    artifacts.write_partition_csv(out / "partition.csv", labels)
    print(json.dumps({"written": str(out / "partition.csv"),
                      "shape": list(labels.shape)}))
    return 0


def cmd_r1_filter(args) -> int:
    out = _outdir(args)
    d_values = [round(d, 6) for d in np.arange(args.d_from, args.d_to + 1e-9, args.step)]
    grid = _grid(args.grid)
    result = r1_filter(d_values, args.delta, grid, baseline_params(d_values[0]))
    payload = {
        "delta": result.delta,
        "d_values": list(result.d_values),
        "bounding_box": list(result.bounding_box),
        "n_points": int(len(result.points)),
    }
    artifacts.write_json(out / "r1_filter.json", payload)
    print(json.dumps(payload))
    return 0


def cmd_fit(args) -> int:
    out = _outdir(args)
    params = _params(args)
    grid = _grid(args.grid)
    surface = sweep_surfaces(grid, params)
    fit = fit_region_maps(surface, Region(args.region), delta=args.delta)
    reports = {t: {"r_squared": rep.r_squared, "sse": rep.sse, "n": rep.n_samples}
               for t, rep in fit["reports"].items()}
    payload = {"region": args.region, "d": params.length, "delta": args.delta,
               "reports": reports}
    artifacts.write_json(out / f"fit_{args.region}.json", payload)
    print(json.dumps(payload))
    return 0


def cmd_composite(args) -> int:
    out = _outdir(args)
    table = load_table(args.table)
    cmap = CompositeMap(table=table, d=args.d)
    v, phi, regions = cmap.iterate(args.v0, args.phi0, args.steps)
    artifacts.write_trajectory_csv(out / "composite_trajectory.csv", v, phi, regions)
    print(f"{'k':>4} {'v':>12} {'phi':>12}  region")
    for k in range(len(v)):
        print(f"{k:>4} {v[k]:>12.6f} {phi[k]:>12.6f}  {getattr(regions[k], 'value', regions[k])}")
    return 0


def cmd_bifurcation(args) -> int:
    out = _outdir(args)
    table = load_table(args.table) if args.kind == "composite" else None
    samples = analysis.bifurcation_scan(args.kind, args.d_from, args.d_to, args.step,
                                        base=baseline_params(args.d_from), table=table)
    path = artifacts.write_bifurcation_csv(out / f"bifurcation_{args.kind}.csv", samples)
    artifacts.write_plot_script(out / f"bifurcation_{args.kind}.gp", path.name,
                                title=f"bifurcation diagram ({args.kind} map)",
                                columns=(1, 2), xlabel="d", ylabel="v_k")
    pd_d = analysis.first_period_doubling(samples)
    artifacts.write_json(out / f"bifurcation_{args.kind}_meta.json",
                         _run_metadata(args, seed_state=list(analysis.DEFAULT_SEED_STATE),
                                       first_period_doubling_d=pd_d))
    print(json.dumps({"written": str(path), "first_period_doubling_d": pd_d}))
    return 0


def cmd_compare(args) -> int:
    out = _outdir(args)
    ics = [(args.v0, args.phi0)]
    records = analysis.compare_exact_vs_composite(ics, args.d, table=load_table(args.table))
    path = artifacts.write_comparison_csv(out / "comparison.csv", records)
    artifacts.write_plot_script(out / "comparison.gp", path.name,
                                title=f"exact vs composite trajectories d={args.d}",
                                columns=(5, 6), xlabel="v_k", ylabel="phi_k")
    artifacts.write_json(out / "comparison_meta.json",
                         _run_metadata(args, initial_conditions=ics))
    print(json.dumps({"written": str(path),
                      "tail_distances": [r.tail_distance for r in records]}))
    return 0


def cmd_aux_domain(args) -> int:
    out = _outdir(args)
    report = auxmap.iterate_updates(args.case, d=args.d, n_updates=args.updates,
                                    table=load_table(args.table))
    artifacts.write_aux_report(out / "aux_report.json", report)
    artifacts.write_widths_csv(out / "widths.csv", report)
    print(json.dumps(artifacts.aux_report_payload(report)["boxes"][-1]
                     | {"statement": report.statement_case, "escaped": report.escaped}))
    return 0


def cmd_case(args) -> int:
    out = _outdir(args)
    result = analysis.run_case_preset(args.name, table=load_table(args.table))
    written = artifacts.write_case_result(out, result)
    print(json.dumps({"case": args.name,
                      "classification": str(result.classification),
                      "written": [str(p) for p in written]}))
    return 0


def cmd_calibrate(args) -> int:
    table = build_calibrated_table(log=print if args.verbose else None)
    path = Path(args.out or "calibrated_coefficients.json")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(table.to_dict(), indent=1))
    print(json.dumps({"written": str(path)}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vipair",
                                     description="vibro-impact pair return-map toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, d_default=0.35):
        p.add_argument("--d", type=float, default=d_default, help="dimensionless length")
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--out", help=f"output directory (default $" + DEFAULT_OUT_ENV + " or runs/)")

    p = sub.add_parser("sweep", help="sweep the first-return surfaces on a grid")
    common(p)
    p.add_argument("--grid", default="200x200")
    p.add_argument("--v-max", type=float, default=1.0)
    p.add_argument("--phi-max", type=float, default=float(np.pi))
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("partition", help="class-label raster of a sweep")
    common(p)
    p.add_argument("--grid", default="200x200")
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("r1-filter", help="diagonal-proximity filter over a d range")
    p.add_argument("--d-from", type=float, default=0.26)
    p.add_argument("--d-to", type=float, default=0.35)
    p.add_argument("--step", type=float, default=0.01)
    p.add_argument("--delta", type=float, default=1.2)
    p.add_argument("--grid", default="100x100")
    p.add_argument("--out")
    p.set_defaults(func=cmd_r1_filter)

    p = sub.add_parser("fit", help="refit one region's maps from a sweep")
    common(p)
    p.add_argument("--region", default="R1", choices=[r.value for r in Region if r != Region.RESET])
    p.add_argument("--delta", type=float, default=1.2)
    p.add_argument("--grid", default="200x200")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("composite", help="iterate the composite map")
    common(p)
    p.add_argument("--v0", type=float, required=True)
    p.add_argument("--phi0", type=float, required=True)
    p.add_argument("--steps", type=int, default=4)
    p.add_argument("--table", default="calibrated")
    p.set_defaults(func=cmd_composite)

    p = sub.add_parser("bifurcation", help="continuation bifurcation scan")
    p.add_argument("--kind", choices=["exact", "composite"], default="exact")
    p.add_argument("--d-from", type=float, default=0.36)
    p.add_argument("--d-to", type=float, default=0.25)
    p.add_argument("--step", type=float, default=0.001)
    p.add_argument("--table", default="calibrated")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bifurcation)

    p = sub.add_parser("compare", help="exact vs composite trajectories")
    common(p)
    p.add_argument("--v0", type=float, default=0.2)
    p.add_argument("--phi0", type=float, default=0.1)
    p.add_argument("--table", default="calibrated")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("aux-domain", help="auxiliary-map attracting-domain updates")
    p.add_argument("--case", choices=["FP", "PD", "CD"], required=True)
    p.add_argument("--d", type=float)
    p.add_argument("--updates", type=int)
    p.add_argument("--table", default="calibrated")
    p.add_argument("--out")
    p.set_defaults(func=cmd_aux_domain)

    p = sub.add_parser("case", help="full preset: trajectory + aux domain + reports")
    p.add_argument("--name", choices=["FP", "PD", "CD"], required=True)
    p.add_argument("--table", default="calibrated")
    p.add_argument("--out")
    p.set_defaults(func=cmd_case)

    p = sub.add_parser("calibrate", help="regenerate the coefficient table from the exact map")
    p.add_argument("--out")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_calibrate)

    return parser


def run_command(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, ValueError) as err:
        print(json.dumps({"error": type(err).__name__, "message": str(err)}),
              file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
