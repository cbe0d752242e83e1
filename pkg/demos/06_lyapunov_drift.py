"""One-step drift of L = sum_n lambda_n F(W_n) under MUCF.

When the total head-of-line wait |W| is large the drift should turn negative,
pulling the network back. Here f is piecewise linear with a steeper slope for late
packets.

Run: python3 demos/06_lyapunov_drift.py
"""

import numpy as np

from fairsched import SchedulerSpec, Simulation, SwitchSchedules, WeightFunction
from fairsched.analysis import drift_by_backlog

f = WeightFunction(breakpoints=[0.0], slopes=[0.5, 2.0], rho=2.0)
horizon = 150_000
sim = Simulation(SwitchSchedules(4), np.full(16, 0.95 / 4), SchedulerSpec("mucf", weight=f),
                 seed=2, probe_lyapunov=True, horizon=horizon).run(horizon)
s = sim.probe_series()
for b in drift_by_backlog(s["L"], s["W"], [0.0, 0.5, 0.75, 0.9, 0.95, 1.0]):
    print(f"|W| in [{b.lo:6.0f}, {b.hi:6.0f}]  slots {b.count:6d}  mean drift {b.mean_drift:+8.2f}")
