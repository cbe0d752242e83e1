"""Who gets the bandwidth of an overloaded output?

A 2x2 switch where inputs 0 and 1 both send to output 1 at rates 0.6 and 0.5.
Output 1 can serve one packet per slot, so the two flows must share 1.0.

Run: python3 demos/01_overload_fairness.py
"""

import numpy as np

from fairsched import ShadowPolicy, SchedulerSpec, Simulation, SwitchSchedules, check_admissibility

rates = np.array([0.0, 0.6, 0.0, 0.5])  # queue n = i*M + j
switch = SwitchSchedules(2)
print("admissible?", check_admissibility(switch, rates).admissible,
      "(column load", check_admissibility(switch, rates).load, ")")

horizon = 200_000
runs = [
    ("LQF", SchedulerSpec("lqf"), None),
    ("MUCF, FIFO shadow", SchedulerSpec("mucf"), ShadowPolicy.fifo()),
    ("MUCF, round-robin shadow", SchedulerSpec("mucf"), ShadowPolicy.round_robin()),
]
for label, spec, shadow in runs:
    sim = Simulation(switch, rates, spec, shadow_policy=shadow, seed=1).run(horizon)
    r = sim.state.departures[[1, 3]] / horizon
    print(f"{label:26s} input 0 gets {r[0]:.3f}, input 1 gets {r[1]:.3f}")

# LQF splits in proportion to the offered load (0.55/0.45).
# MUCF follows whatever its shadow output queue does: a FIFO shadow is also
# proportional, a round-robin shadow splits the line evenly.
