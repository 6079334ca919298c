"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line; the lines are printed in the terminal
summary (see ``conftest.py``) and, with ``-s``, as the tests run. Oracles
are computed here from closed forms or by direct enumeration rather than
taken from ``ffms.report``.
"""
import math
import os
import subprocess
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from ffms import core
from ffms.config import RunConfig
from ffms.core import ActuatorSpec, TubeSpec
from ffms.errors import ValidityWarning
from ffms.design_rules import FABRICS, STITCH_PATTERNS, FabricAssembly, classify_assembly
from ffms.estimation import (TestSeries, cycle_work, cycle_work_pv, efficiency, fit_volume_slope,
                             hydraulic_reference_cycle, pneumatic_reference_cycle)
from ffms.hydraulics import (WATER, Drive, LoadModel, Waveform, build_network, estimate_latency, length_to_volume,
                             quasi_static_state, simulate_transient, volume_to_length)
from ffms.optimizer import Catalog, CatalogTube, DesignRequirements, solve_design

from conftest import A_FLUID, A_TUBE, E, EPS
from test_optimizer import _oracle

RESULTS = {}


def record(number, title, ok, detail):
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    RESULTS[number] = line
    print(line)
    assert ok, line


def test_01_force_range(proto3):
    drop = float(core.external_force(proto3, EPS, 200e3) - core.external_force(proto3, EPS, 750e3))
    want = 3 * A_FLUID * 550e3
    dev = abs(drop - 13.0) / 13.0
    ok = abs(drop - 12.705) <= 1e-6 and abs(drop - want) <= 1e-9 and dev <= 0.05
    record(1, "force range 3-channel", ok, f"{drop:.9f} N over 200-750 kPa; {dev:.1%} from measured 13 N")


def test_02_zero_force_pressure(proto3):
    p = core.max_pressure(proto3, EPS)
    ref = abs(p - 650e3) / 650e3
    ok = abs(p - E * EPS * A_TUBE / A_FLUID) <= 1e-6 and abs(p - 674.3e3) <= 100.0
    record(2, "zero-force pressure", ok, f"{p / 1e3:.4f} kPa; {ref:.1%} from the ~650 kPa pre-pressurization")


def test_03_compression_chain():
    cfg = RunConfig.bundled("compression_band")
    a = cfg.actuator()
    c = cfg["compression"]
    F = float(core.external_force(a, a.pre_strain, c["pressure_pa"]))
    pc = a.effective_thickness * F / (c["cylinder_radius_m"] * a.sheet_cross_section)
    with pytest.warns(ValidityWarning):
        pc_lib = float(core.compression_pressure(F, a, c["cylinder_radius_m"]))
    Fc = pc * c["contact_area_m2"]
    ok = (pc_lib == pytest.approx(pc, rel=1e-12) and abs(pc - 44.5e3) / 44.5e3 <= 0.01
          and abs(Fc - 9.30) / 9.30 <= 0.01)
    record(3, "compression chain", ok, f"p_c {pc / 1e3:.3f} kPa, F_c {Fc:.4f} N over 209 mm^2 (calibrated band)")


def test_04_ten_channel(proto10):
    drop = float(core.external_force(proto10, EPS, 180e3) - core.external_force(proto10, EPS, 620e3))
    per = drop / 10
    ok = abs(drop - 33.88) <= 0.01 and abs(per - 3.388) <= 0.001
    record(4, "10-channel model value", ok,
           f"{drop:.4f} N, {per:.3f} N/tube; measured 50 N and ~5 N/tube (model gap {1 - drop / 50:.0%}, recorded)")


def _random_recovery_cycle(rng):
    n = int(rng.integers(5, 40))
    V = np.sort(rng.uniform(0, 1e-6, n))
    V = np.concatenate([[0.0], V, [1e-6]])
    p_up = rng.uniform(1e4, 1e6, len(V))
    p_dn = p_up[::-1] * rng.uniform(0.05, 0.95, len(V))
    p = np.concatenate([p_up, p_dn, [p_up[0]]])
    vol = np.concatenate([V, V[::-1], [0.0]])
    return p, vol


def test_05_efficiency():
    refs = {}
    for name, (traj, meta) in (("hydraulic", hydraulic_reference_cycle()), ("pneumatic", pneumatic_reference_cycle())):
        w = cycle_work(traj, meta["load_mass"], meta["lift_height"])
        refs[name] = (efficiency(w, "corrected").value, efficiency(w, "legacy").value)
    rng = np.random.default_rng(2024)
    held = 0
    for _ in range(1000):
        p, V = _random_recovery_cycle(rng)
        w0 = cycle_work_pv(p, V)
        assert w0.W_minus < 0 < w0.W_in
        U = rng.uniform(0, 1) * w0.W_in
        g = 9.80665
        w = cycle_work_pv(p, V, U / (g * 1e-3), 1e-3)
        held += efficiency(w, "corrected").value <= efficiency(w, "legacy").value
    ok = (abs(refs["hydraulic"][0] - 0.46) <= 0.005 and abs(refs["pneumatic"][0] - 0.25) <= 0.005
          and abs(refs["hydraulic"][1] - 0.83) <= 0.005 and held == 1000)
    record(5, "efficiency formulas", ok,
           f"hydraulic {refs['hydraulic'][0]:.4f}/{refs['hydraulic'][1]:.4f}, pneumatic {refs['pneumatic'][0]:.4f} "
           f"(synthetic reference cycles); corrected <= legacy on {held}/1000")


def test_06_hydrostat(proto3):
    got = core.hydrostat_elongation(proto3, E)
    want = (math.e - 1) * proto3.tube.rest_length
    ok = abs(got - want) <= 1e-12 * want
    record(6, "hydrostat identity", ok, f"dL(p=E) = {got!r} m vs (e-1) L0 = {want!r} m")


def test_07_displacement(proto3):
    s = TestSeries("volume_displacement", [0.0, 4.5e-6], [0.0, 0.085])
    fit = fit_volume_slope(s, 3)
    net = build_network(proto3, WATER, volume_slope=fit.volume_slope, dead_volume=1e-7)
    rng = np.random.default_rng(7)
    worst = 0.0
    for v in rng.uniform(1e-7, 1e-4, 1000):
        worst = max(worst, abs(length_to_volume(net, volume_to_length(net, v)) - v) / v)
    ok = abs(fit.volume_slope - 1.765e-5) / 1.765e-5 <= 0.005 and worst <= 1e-12
    record(7, "displacement kinematics", ok,
           f"A_eff {fit.volume_slope:.5e} m^2 from 4.5 mL -> 85 mm; round trip worst {worst:.1e}")


def _pf_area(traj, start):
    k = int(round(start / traj.dt))
    p = traj.port_pressure[k:]
    F = traj.total_force[k:]
    # shoelace, closing edge implied
    return float(0.5 * np.sum((F + np.roll(F, -1)) * (np.roll(p, -1) - p)))


def _latency(name, f=0.2, periods=3):
    cfg = RunConfig.bundled(name)
    a = cfg.actuator()
    d = cfg["drive"]
    load = LoadModel.at_pressure(a, d["offset_pa"], cfg["load"]["stiffness_n_per_m"])
    wf = Waveform("sine", d["offset_pa"], d["amplitude_pa"], f)
    traj = simulate_transient(cfg.network(), a, Drive("pressure", wf), 1e-3, periods / f, cfg.fluid(), load)
    return estimate_latency(traj, "pressure", "force")


def test_08_transient():
    cfg = RunConfig.bundled("paper_10ch")
    a, net, fluid = cfg.actuator(), cfg.network(), cfg.fluid()
    d = cfg["drive"]
    load = LoadModel.at_pressure(a, d["offset_pa"], cfg["load"]["stiffness_n_per_m"])
    cycles, hold = 2, 2.0

    def one(f):
        wf = Waveform("sine", d["offset_pa"], d["amplitude_pa"], f, 0.0, cycles)
        T = cycles / f
        traj = simulate_transient(net, a, Drive("pressure", wf), 1e-3, T + hold, fluid, load)
        area = _pf_area(traj.window((cycles - 1) / f, T), 0.0)
        qs = quasi_static_state(net, a, wf(T + hold), "pressure", fluid, load)
        err = max(np.max(np.abs(traj.pressure[-1] / qs["pressure"] - 1)),
                  np.max(np.abs(traj.force[-1] - qs["force"])) / np.max(np.abs(qs["force"])))
        return area, float(err)

    freqs = (0.5, 0.1, 0.02)
    with ThreadPoolExecutor(4) as pool:
        rows = list(pool.map(one, freqs))
        lat = list(pool.map(_latency, ("paper_10ch", "paper_3ch")))
    areas = [r[0] for r in rows]
    terminal = max(r[1] for r in rows)
    ls, lp = lat
    ok = all(b < a_ for a_, b in zip(areas, areas[1:])) and terminal <= 1e-3 and 0.05 <= ls <= 0.2 and ls > lp
    txt = ", ".join(f"{f:g} Hz {x:.4g}" for f, x in zip(freqs, areas))
    record(8, "transient convergence", ok,
           f"pF areas {txt} N Pa; terminal error {terminal:.1e}; latency series {ls * 1e3:.1f} ms > "
           f"parallel {lp * 1e3:.2f} ms")


def _catalog(rng):
    tubes = []
    for _ in range(int(rng.integers(1, 6))):
        ri = float(rng.choice([0.4e-3, 0.6e-3, 0.8e-3, 1.0e-3]))
        tubes.append(CatalogTube(TubeSpec(ri, ri * float(rng.choice([1.15, 1.3, 1.5, 2.0])),
                                          float(rng.choice([0.08, 0.1224, 0.2])), float(rng.choice([0.8e6, 1.1e6])))))
    asms = [FabricAssembly(str(rng.choice(FABRICS, p=[0.6, 0.25, 0.15])), str(rng.choice(STITCH_PATTERNS)),
                           str(rng.choice(["straight", "zigzag"])), bool(rng.random() < 0.8),
                           float(rng.choice([500.0, 4000.0])), float(rng.choice([3e-3, 5e-3])),
                           float(rng.choice([0.5e-3, 2e-3])))
            for _ in range(int(rng.integers(1, 4)))]
    return Catalog(tuple(tubes), tuple(asms))


def test_09_optimizer_oracle():
    rng = np.random.default_rng(99)
    same, feasible_cases, largest = 0, 0, 0
    for _ in range(50):
        cat = _catalog(rng)
        req = DesignRequirements(float(rng.uniform(1, 30)), float(rng.uniform(0.01, 0.1)),
                                 float(rng.uniform(2e5, 2e6)), float(rng.uniform(0.02, 0.3)),
                                 float(rng.uniform(3e-3, 8e-3)), (0.0, float(rng.uniform(0.2, 1.0))))
        objective = str(rng.choice(["min_mass", "min_pressure", "min_width"]))
        n_max = 64
        largest = max(largest, len(cat.tubes) * len(cat.assemblies) * n_max)
        res = solve_design(req, cat, objective, n_max=n_max, top_k=None)
        found, _ = _oracle(req, cat, objective, n_max)
        got = [(d.actuator.tube_count, d.tube_index, d.assembly_index, tie(d.objective)) for d in res.designs]
        want = [(k[1], k[6], k[7], k[0]) for k, _ in found]
        same += got == want
        feasible_cases += bool(found)
    ok = same == 50 and largest <= 10_000
    record(9, "optimizer-oracle equivalence", ok,
           f"{same}/50 catalogs identical ({feasible_cases} with feasible designs, <= {largest} candidates each)")


def tie(x):
    return float(f"{x:.12g}")


def test_10_rule_totality():
    verdicts = {}
    for fab in FABRICS:
        for pat in STITCH_PATTERNS:
            for wr in (True, False):
                style = "straight" if fab == "non_stretch" else "zigzag"
                verdicts[(fab, pat, wr)] = classify_assembly(FabricAssembly(fab, pat, style, wr))
    red = verdicts[("non_stretch", "side", True)].valid
    four_side = any(verdicts[("four_way", "side", w)].valid for w in (True, False))
    ok = len(verdicts) == 12 and all(v is not None for v in verdicts.values()) and red and not four_side
    record(10, "design-rule totality", ok,
           f"{len(verdicts)} verdicts; non-stretch/side/wrinkled valid={red}; four-way/side valid={four_side}")


def test_11_determinism(tmp_path):
    cmd = [sys.executable, "-m", "ffms.cli", "report", "--config", "paper_3ch"]
    env = dict(os.environ, PYTHONHASHSEED="0")
    procs = [subprocess.Popen(cmd + ["--out", str(tmp_path / d)], env=env, stdout=subprocess.PIPE,
                              stderr=subprocess.PIPE) for d in ("a", "b")]
    codes = [p.wait(timeout=300) for p in procs]
    a = (tmp_path / "a" / "report.md").read_bytes()
    b = (tmp_path / "b" / "report.md").read_bytes()
    ok = codes == [0, 0] and a == b and a.count(b"| PASS |") == 11
    record(11, "determinism", ok, f"two report runs byte-identical={a == b}, exit codes {codes}")
