"""Pick tubes and tube count for a target force range and stroke."""
from ffms import FabricAssembly, TubeSpec
from ffms.optimizer import Catalog, CatalogTube, DesignRequirements, solve_design

tubes = [CatalogTube(TubeSpec(ri, ro, 0.12, 1.1e6), name=f"{2e3 * ri:.1f}/{2e3 * ro:.1f} mm")
         for ri, ro in [(0.4e-3, 0.52e-3), (0.6e-3, 0.78e-3), (0.8e-3, 1.04e-3), (1.0e-3, 1.3e-3)]]
fabrics = [FabricAssembly(), FabricAssembly(conduit_width=3.5e-3), FabricAssembly("two_way", "side", "zigzag")]
catalog = Catalog(tubes, fabrics)

req = DesignRequirements(min_force_range=15.0, min_stroke=0.05, pressure_budget=700e3,
                         max_sheet_width=0.08, max_thickness=5e-3, strain_window=(0.0, 0.8))
for objective in ("min_mass", "min_width"):
    res = solve_design(req, catalog, objective, top_k=3)
    print(objective)
    for d in res.designs:
        r = d.record()
        print(f"  N={r['tube_count']:2d}  tube {tubes[d.tube_index].name:12s} fabric #{d.assembly_index}  "
              f"mass {r['mass_kg'] * 1e3:5.2f} g  width {r['sheet_width_m'] * 1e3:4.0f} mm  "
              f"p_max {r['max_pressure_pa'] / 1e3:.0f} kPa")

# ask for too much and see what blocks it
res = solve_design(DesignRequirements(15.0, 0.05, 100e3, 0.08, 5e-3, (0.0, 0.8)), catalog)
print("budget 100 kPa feasible:", res.feasible)
for v in res.violations:
    print(f"  {v.name}: need {v.required:.4g}, have {v.actual:.4g}")
