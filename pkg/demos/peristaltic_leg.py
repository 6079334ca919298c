"""A three-band leg sleeve running a distal compression wave."""
import os

from ffms import svg
from ffms.config import RunConfig
from ffms.garment import LimbProfile, schedule_peristalsis, simulate_garment

os.makedirs("out", exist_ok=True)

cfg = RunConfig.bundled("leg_garment_3seg")
g = cfg["garment"]
band = cfg.actuator()
limb = LimbProfile((0.0, 0.1, 0.2), tuple(g["limb_radii_m"]))
wave = schedule_peristalsis(3, g["period_s"], "distal", g["p_low_pa"], g["p_high_pa"])

res = simulate_garment(wave, band, limb, 2 * g["period_s"], volume_slope=cfg["network"]["volume_slope_m2"],
                       sample_dt=0.02)
rep = res.report()
for i, peak in enumerate(rep["peak_compression_pa"]):
    print(f"band {i + 1}: r={limb.radii[i] * 1e3:.0f} mm  peak {peak / 1e3:5.2f} kPa  "
          f"above 4 kPa {rep['duty_above']['4000'][i]:.0%} of the time")

with open("out/leg_wave.svg", "w") as fh:
    fh.write(svg.heat_map(res.t, res.compression / 1e3, "Leg compression (kPa)"))
with open("out/leg_wave.csv", "w") as fh:
    fh.write(res.to_csv())
