"""Command-line interface.

Usage::

    ffms <subcommand> --config run.json [--out DIR] [--format csv|json|svg] [--dump-config] [--seed N]

``--config`` also accepts the name of a bundled config (``paper_3ch``, ...).
Exit status: 0 success, 1 config or schema error, 2 computation error,
3 infeasible design.
"""
from __future__ import annotations

import argparse
import itertools
import json
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import core
from .config import BUNDLED, RunConfig, set_path
from .design_rules import check_failures, classify_assembly, rule_table_version
from .errors import ConfigError, FFMSError, ValidityWarning
from .estimation import TestSeries, fit_modulus, fit_volume_slope
from .garment import (LimbProfile, schedule_peristalsis, simulate_garment, single_band_schedule,
                      withdrawal_compression)
from .hydraulics import estimate_latency, simulate_transient
from .optimizer import Catalog, CatalogTube, DesignRequirements, solve_design
from . import report as report_mod
from . import svg

SUBCOMMANDS = ("simulate", "fit", "check", "design", "garment", "sweep", "report")
EXIT_OK, EXIT_CONFIG, EXIT_COMPUTE, EXIT_INFEASIBLE = 0, 1, 2, 3
SWEEP_OUTPUTS = ("max_pressure_pa", "blocked_force_n", "force_at_check_n", "hydrostat_elongation_m",
                 "compression_pa", "latency_s")


def _parser():
    p = argparse.ArgumentParser(prog="ffms", description="Fluidic fabric muscle sheet tools")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", help="config JSON path or bundled config name")
    p.add_argument("--out", default=None, help="output directory (default: stdout)")
    p.add_argument("--format", choices=("csv", "json", "svg"), default=None)
    p.add_argument("--dump-config", action="store_true", help="print the resolved config and exit")
    p.add_argument("--seed", type=int, default=None, help="seed for randomized checks (u64)")
    return p


def _load(arg):
    if arg is None:
        raise ConfigError("/: --config is required for this subcommand", "/")
    if arg in BUNDLED and not os.path.exists(arg):
        return RunConfig.bundled(arg)
    return RunConfig.load(arg)


class _Sink:
    """Writes named artifacts into ``--out`` or, without it, to stdout."""

    def __init__(self, out):
        self.out = out
        if out is not None:
            os.makedirs(out, exist_ok=True)
        self.written = []

    def emit(self, name, text):
        if self.out is None:
            sys.stdout.write(text)
            return
        path = os.path.join(self.out, name)
        with open(path, "w", newline="") as fh:
            fh.write(text)
        self.written.append(path)


def _dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# subcommands ------------------------------------------------------------------

def cmd_simulate(cfg, args, sink):
    sim = cfg["simulation"]
    traj = simulate_transient(cfg.network(), cfg.actuator(), cfg.drive(), sim["dt_s"], sim["duration_s"],
                              cfg.fluid(), cfg.load_model())
    fmt = args.format or "csv"
    if fmt == "csv":
        sink.emit("trajectory.csv", traj.to_csv())
    elif fmt == "json":
        sink.emit("trajectory.json", _dumps({
            "t": traj.t.tolist(), "pressure": traj.pressure.tolist(), "volume": traj.volume.tolist(),
            "length": traj.length.tolist(), "force": traj.force.tolist(),
        }))
    else:
        sink.emit("trajectory.svg", svg.line_chart(
            traj.t, {"total force (N)": traj.total_force}, "Sheet force", "time (s)", "force (N)"))
        sink.emit("pressure.svg", svg.line_chart(
            traj.t, {f"p_{k + 1}": traj.pressure[:, k] / 1e3 for k in range(traj.channel_count)},
            "Channel pressure", "time (s)", "pressure (kPa)"))
    return EXIT_OK


def cmd_fit(cfg, args, sink):
    block = cfg.data.get("fit")
    if block is None or "data_csv" not in block:
        raise ConfigError("/fit/data_csv: fit needs a data file", "/fit/data_csv")
    path = block["data_csv"]
    if not os.path.isabs(path) and args.config and os.path.exists(args.config):
        path = os.path.join(os.path.dirname(os.path.abspath(args.config)), path)
    series = TestSeries.from_csv(path, kind=block["kind"])
    if series.kind == "tensile":
        fit = fit_modulus(series, tuple(block["strain_window"]))
        out = {"kind": "tensile", "elastic_modulus_pa": fit.modulus, "intercept_pa": fit.intercept,
               "residual_rms_pa": fit.residual_rms, "n_points": fit.n_points}
    else:
        fit = fit_volume_slope(series, block["channel_count"])
        out = {"kind": "volume_displacement", "volume_slope_m2": fit.volume_slope,
               "dead_volume_m3": fit.dead_volume, "r_squared": fit.r_squared}
    sink.emit("fit.json", _dumps(out))
    return EXIT_OK


def cmd_check(cfg, args, sink):
    a = cfg.actuator()
    c = cfg["check"]
    cls = classify_assembly(a.assembly)
    fails = check_failures(a, c["pressure_pa"], spacing_ratio=c["spacing_ratio"],
                           min_thread_count=c["min_thread_count"])
    out = {
        "rule_table_version": rule_table_version(),
        "classification": {"axial_stretch": cls.axial_stretch, "radial_risk": cls.radial_risk,
                           "valid": cls.valid, "notes": list(cls.notes)},
        "pressure_pa": c["pressure_pa"],
        "failures": [{"mode": f.mode, "flagged": f.flagged, "severity": f.severity,
                      "margin": f.margin if np.isfinite(f.margin) else None, "detail": f.detail} for f in fails],
        "flagged": [f.mode for f in fails if f.flagged],
        "max_pressure_pa": core.max_pressure(a, a.pre_strain) if a.pre_strain <= 1 else None,
    }
    sink.emit("check.json", _dumps(out))
    return EXIT_OK


def _catalog(cfg, block):
    if block["catalog"] is None:
        a = cfg.actuator()
        entry = CatalogTube(a.tube, fluid_area=a.fluid_area_override, tube_area=a.tube_area_override)
        return Catalog((entry,), (a.assembly,))
    return Catalog.from_dict(block["catalog"])


def cmd_design(cfg, args, sink):
    block = cfg.data.get("design")
    if block is None:
        raise ConfigError("/design: design needs a requirements block", "/design")
    r = block["requirements"]
    req = DesignRequirements(r["min_force_range_n"], r["min_stroke_m"], r["pressure_budget_pa"],
                             r["max_sheet_width_m"], r["max_thickness_m"], tuple(r["strain_window"]))
    result = solve_design(req, _catalog(cfg, block), block["objective"], block["n_max"], block["top_k"])
    fmt = args.format or "json"
    if fmt == "csv":
        sink.emit("designs.csv", result.to_csv())
    else:
        sink.emit("designs.json", result.to_json() + "\n")
        if args.out is not None:
            sink.emit("designs.csv", result.to_csv())
    return EXIT_OK if result.feasible else EXIT_INFEASIBLE


def cmd_garment(cfg, args, sink):
    g = cfg.data.get("garment")
    if g is None:
        raise ConfigError("/garment: garment block missing", "/garment")
    a = cfg.actuator()
    if g["withdrawal"] is not None:
        w = g["withdrawal"]
        slope = cfg["network"]["volume_slope_m2"] or a.tube.fluid_area
        pc = withdrawal_compression(a, w["cylinder_radius_m"], w["volume_m3"], slope)
        sink.emit("withdrawal.json", _dumps({"withdrawn_volume_m3": w["volume_m3"],
                                             "cylinder_radius_m": w["cylinder_radius_m"],
                                             "compression_pa": pc}))
        return EXIT_OK
    radii = g["limb_radii_m"] if "limb_radii_m" in g else [0.05] * g["segments"]
    if len(radii) != g["segments"]:
        raise ConfigError("/garment/limb_radii_m: need one radius per segment", "/garment/limb_radii_m")
    limb = LimbProfile(tuple(i * g["segment_spacing_m"] for i in range(len(radii))), tuple(radii))
    if g["segments"] == 1:
        sched = single_band_schedule(g["period_s"], g["p_low_pa"], g["p_high_pa"], g["shape"])
    else:
        sched = schedule_peristalsis(g["segments"], g["period_s"], g["direction"], g["p_low_pa"],
                                     g["p_high_pa"], g["shape"])
    net = cfg["network"]
    res = simulate_garment(sched, a, limb, g["duration_s"], g["dt_s"], cfg.fluid(), tuple(g["thresholds_pa"]),
                           g["transient"], net["volume_slope_m2"], net["conduit_length_m"],
                           g["load_stiffness_n_per_m"], g["sample_dt_s"])
    fmt = args.format or "csv"
    if fmt == "csv":
        sink.emit("garment.csv", res.to_csv())
        if args.out is not None:
            sink.emit("garment_report.json", _dumps(res.report()))
    elif fmt == "json":
        sink.emit("garment_report.json", _dumps(res.report()))
    else:
        sink.emit("garment.svg", svg.heat_map(res.t, res.compression / 1e3, "Limb compression (kPa)"))
    return EXIT_OK


def _sweep_point(cfg, outputs):
    a = cfg.actuator()
    row = {}
    p_check = cfg["check"]["pressure_pa"]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ValidityWarning)
        for name in outputs:
            if name == "max_pressure_pa":
                row[name] = core.max_pressure(a, a.pre_strain)
            elif name == "blocked_force_n":
                row[name] = core.external_force(a, a.pre_strain, 0.0)
            elif name == "force_at_check_n":
                row[name] = core.external_force(a, a.pre_strain, p_check)
            elif name == "hydrostat_elongation_m":
                row[name] = core.hydrostat_elongation(a, p_check)
            elif name == "compression_pa":
                c = cfg.data.get("compression")
                if c is None:
                    raise ConfigError("/compression: compression_pa output needs a compression block",
                                      "/compression")
                F = max(core.external_force(a, a.pre_strain, c["pressure_pa"]), 0.0)
                row[name] = core.compression_pressure(F, a, c["cylinder_radius_m"])
            elif name == "latency_s":
                sim = cfg["simulation"]
                traj = simulate_transient(cfg.network(), a, cfg.drive(), sim["dt_s"], sim["duration_s"],
                                          cfg.fluid(), cfg.load_model())
                row[name] = estimate_latency(traj, "pressure", "force")
    return row


def cmd_sweep(cfg, args, sink):
    block = cfg.data.get("sweep")
    if block is None or not block.get("parameters"):
        raise ConfigError("/sweep/parameters: sweep needs at least one parameter", "/sweep/parameters")
    outputs = block["outputs"]
    for i, name in enumerate(outputs):
        if name not in SWEEP_OUTPUTS:
            raise ConfigError(f"/sweep/outputs/{i}: unknown output {name!r}", f"/sweep/outputs/{i}")
    names = sorted(block["parameters"])
    grid = list(itertools.product(*(block["parameters"][n] for n in names)))
    configs = []
    for values in grid:
        data = cfg.data
        for n, v in zip(names, values):
            data = set_path(data, n, v)
        data = dict(data)
        data.pop("sweep", None)
        configs.append(RunConfig.from_dict(data))
    workers = block["workers"]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(lambda c: _sweep_point(c, outputs), configs))
    else:
        rows = [_sweep_point(c, outputs) for c in configs]
    fmt = args.format or "csv"
    if fmt == "json":
        sink.emit("sweep.json", _dumps([dict(zip(names, v)) | r for v, r in zip(grid, rows)]))
    else:
        lines = [",".join(names + outputs)]
        for values, r in zip(grid, rows):
            lines.append(",".join([repr(v) for v in values] + [repr(float(r[o])) for o in outputs]))
        sink.emit("sweep.csv", "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_report(cfg, args, sink):
    seed = args.seed if args.seed is not None else (cfg["seed"] if cfg is not None else 0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ValidityWarning)
        rows = report_mod.build_report(seed)
    sink.emit("report.md", report_mod.render(rows, seed))
    return EXIT_OK if all(r.passed for r in rows) else EXIT_COMPUTE


COMMANDS = {
    "simulate": cmd_simulate, "fit": cmd_fit, "check": cmd_check, "design": cmd_design,
    "garment": cmd_garment, "sweep": cmd_sweep, "report": cmd_report,
}


def run(argv=None):
    """Parse ``argv`` and execute one subcommand. Returns the exit status."""
    args = _parser().parse_args(argv)
    try:
        if args.seed is not None and not 0 <= args.seed < 2 ** 64:
            raise ConfigError("/seed: must be an unsigned 64-bit integer", "/seed")
        cfg = None
        if args.config is not None or args.subcommand != "report":
            cfg = _load(args.config)
            if args.seed is not None:
                cfg = RunConfig.from_dict(cfg.data | {"seed": args.seed})
        if args.dump_config:
            if cfg is None:
                raise ConfigError("/: --dump-config needs --config", "/")
            sys.stdout.write(cfg.dumps())
            return EXIT_OK
        sink = _Sink(args.out)
        return COMMANDS[args.subcommand](cfg, args, sink)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FFMSError, ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
