"""Cycle efficiency, counted two ways.

The legacy formula books work handed back to the source during withdrawal
as output, so it rewards cycles that do little. The corrected formula only
counts the lifted load against the net input.
"""
from ffms.estimation import (CycleWork, cycle_work, efficiency, hydraulic_reference_cycle,
                             pneumatic_reference_cycle)

for name, (traj, meta) in (("hydraulic", hydraulic_reference_cycle()), ("pneumatic", pneumatic_reference_cycle())):
    w = cycle_work(traj, meta["load_mass"], meta["lift_height"])
    print(f"{name:9s} W+ {w.W_plus * 1e3:7.3f} mJ  W- {w.W_minus * 1e3:7.3f} mJ  U {w.U_g * 1e3:.3f} mJ  "
          f"corrected {efficiency(w).value:.3f}  legacy {efficiency(w, 'legacy').value:.3f}")

# a cycle that lifts nothing but gives most of its input back
idle = CycleWork(W_plus=0.10, W_minus=-0.09, W_in=0.01, U_g=0.0)
print(f"idle cycle: corrected {efficiency(idle).value:.2f}, legacy {efficiency(idle, 'legacy').value:.2f}")
