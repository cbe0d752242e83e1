"""Link scheduling on a wireless conflict graph.

Five links on a ring: neighbouring links interfere. Feasible schedules are the
independent sets, and the capacity region comes from a linear program over the
maximal ones.

Run: python3 demos/04_wireless_conflict_graph.py
"""

import numpy as np

from fairsched import (ConflictGraphSchedules, SchedulerSpec, Simulation, check_admissibility,
                       rate_stability_report)

ring = ConflictGraphSchedules(5, [(k, (k + 1) % 5) for k in range(5)])
print("maximal independent sets:")
print(ring.enumerate_maximal().astype(int))

for per_link in (0.35, 0.39, 0.41):
    v = check_admissibility(ring, np.full(5, per_link))
    print(f"rate {per_link} per link: load {v.load:.3f}, admissible={v.admissible}")

# each link delivers to its own receiver
rates = np.full(5, 0.38)
sim = Simulation(ring, rates, SchedulerSpec("mucf"), seed=3).run(100_000)
rep = rate_stability_report(sim.metrics())
print("service rates", np.round(rep.rate, 4), "max deviation", round(rep.max_dev_nominal, 4))
