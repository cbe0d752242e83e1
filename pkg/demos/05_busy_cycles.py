"""Longest busy cycle of one shadow output line.

Below capacity the longest run of back-to-back busy slots grows like log(tau);
above capacity the line never empties and it grows linearly.

Run: python3 demos/05_busy_cycles.py
"""

from fairsched.acceptance import shadow_theta
from fairsched.analysis import busy_cycle_report

for rate in (0.9, 1.1):
    series = shadow_theta(rate, 200_000, seed=1)
    fit = busy_cycle_report(series)
    print(f"aggregate rate {rate}")
    for tau, theta in series[::6]:
        print(f"  tau={tau:>7d}  theta={theta[0]:>7d}  theta/tau={theta[0] / (tau + 1):.4f}")
    print(f"  fit theta ~ {fit.slope:.1f} log(tau) + {fit.intercept:.1f}, R^2 = {fit.r2:.3f}")
