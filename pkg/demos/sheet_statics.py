"""Static behaviour of the three-channel sheet.

Force against fluid pressure, the zero-force pressure, the hydrostat regime
above it, and what the band presses into a small cylinder.
"""
import os

import numpy as np

from ffms import ActuatorSpec, FabricAssembly, TubeSpec, core, svg

os.makedirs("out", exist_ok=True)

# published prototype; the quoted areas are used as given
tube = TubeSpec(inner_radius=0.8e-3, outer_radius=1.6e-3, rest_length=0.1224, elastic_modulus=1.1e6)
sheet = ActuatorSpec(tube, 3, 0.8, FabricAssembly(), "parallel", 4.7e-3, 25.2e-3 * 4.7e-3,
                     fluid_area_override=7.7e-6, tube_area_override=5.9e-6)

p = np.linspace(0, 800e3, 161)
F = core.external_force(sheet, sheet.pre_strain, p)
p_max = core.max_pressure(sheet, sheet.pre_strain)
print(f"blocked force      {F[0]:.3f} N")
print(f"zero-force at      {p_max / 1e3:.1f} kPa")
print(f"200 -> 750 kPa     {core.external_force(sheet, 0.8, 200e3) - core.external_force(sheet, 0.8, 750e3):.3f} N")

# past p_max the sheet works as a hydrostat and just gets longer
for q in (p_max, 800e3, 1.1e6):
    print(f"hydrostat dL at {q / 1e3:6.0f} kPa: {core.hydrostat_elongation(sheet, q) * 1e3:.1f} mm")

# wrapped on a 4 cm arm, the remaining force turns into contact pressure
pc = core.compression_pressure(np.maximum(F, 0), sheet, 0.04)
print(f"compression on r=40 mm at 0 kPa: {pc[0] / 1e3:.2f} kPa")

with open("out/force_vs_pressure.svg", "w") as fh:
    fh.write(svg.line_chart(p / 1e3, {"F_ext (N)": F}, "Sheet force", "pressure (kPa)", "force (N)"))
