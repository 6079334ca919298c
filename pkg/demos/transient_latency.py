"""How fast does force follow pressure?

The three-channel sheet fills its tubes in parallel; the ten-channel sheet
is one long series path, so the far tubes see the pressure late.
"""
import os

from ffms import svg
from ffms.config import RunConfig
from ffms.estimation import hysteresis_area
from ffms.hydraulics import Drive, LoadModel, Waveform, estimate_latency, simulate_transient

os.makedirs("out", exist_ok=True)

for name in ("paper_3ch", "paper_10ch"):
    cfg = RunConfig.bundled(name)
    sheet = cfg.actuator()
    d = cfg["drive"]
    load = LoadModel.at_pressure(sheet, d["offset_pa"], cfg["load"]["stiffness_n_per_m"])
    wave = Waveform("sine", d["offset_pa"], d["amplitude_pa"], 0.2)
    traj = simulate_transient(cfg.network(), sheet, Drive("pressure", wave), 1e-3, 15.0, cfg.fluid(), load)
    lag = estimate_latency(traj, "pressure", "force")
    last = traj.window(10.0, 15.0)
    print(f"{name:11s} latency {lag * 1e3:6.1f} ms   pF loop {hysteresis_area(last, 'pF'):10.4g} N Pa   "
          f"dissipated {traj.dissipated[-1] * 1e3:.3f} mJ")
    if name == "paper_10ch":
        chans = {f"p_{k + 1} (kPa)": traj.pressure[:, k] / 1e3 for k in (0, 4, 9)}
        with open("out/series_pressures.svg", "w") as fh:
            fh.write(svg.line_chart(traj.t, chans, "Series channels", "time (s)", "pressure (kPa)"))
