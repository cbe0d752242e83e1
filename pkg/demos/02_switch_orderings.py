"""Latency and emulation gap of MUCF, OCF and LQF on an input-queued switch.

A scaled-down sweep (4x4 switch, 60k slots) of the experiment that compares the
three max-weight schedulers. The full-size version is acceptance criterion 3.

Run: python3 demos/02_switch_orderings.py
"""

from fairsched.analysis import moment_report
from fairsched.experiment import build_config, run_experiment

base = {"topology": {"kind": "switch", "ports": 4}, "horizon": 60_000, "warmup": 6_000,
        "checkpoints": [], "seed": 1}

print(f"{'rho':>4} {'sched':>5} {'E[lat]':>8} {'E[lat^2]':>9} {'E[oq]':>7} {'E[oq^2]':>8}")
for rho in (0.3, 0.6, 0.9):
    for name in ("mucf", "ocf", "lqf"):
        cfg = build_config(dict(base, rates={"uniform": rho}, scheduler={"kind": name}))
        m = moment_report(run_experiment(cfg).metrics)
        print(f"{rho:4.1f} {name:>5} {m.latency.first:8.3f} {m.latency.second:9.2f} "
              f"{m.oq_delay.first:7.3f} {m.oq_delay.second:8.2f}")

# At light load all three look alike; as load grows MUCF keeps packets closest to
# their shadow departure times and LQF drifts furthest.
