"""Command-line entry point: ``fairsched {run,sweep,replicate,validate-config,acceptance}``.

Exit status is 0 on success, 1 when an acceptance criterion fails and 2 on a bad
config, guard violation or other runtime error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Sequence

from .acceptance import CRITERIA, run_suite
from .analysis import check_admissibility
from .core import InvariantError, ScheduleError
from .experiment import (SUMMARY_COLUMNS, ConfigError, NUMERIC_FIELDS, load_config,
                         run_experiment, run_replications, run_sweep, write_table)
from .schedules import SizeGuardError

log = logging.getLogger("fairsched")


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x]


def _config(args):
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_overrides(seed=args.seed)
    return cfg


def cmd_run(args) -> int:
    cfg = _config(args)
    res = run_experiment(cfg, output_dir=args.output_dir)
    s = res.summary
    print(f"{s['scheduler']} seed={s['seed']} horizon={s['horizon']}: "
          f"latency m1={s['latency_m1']:.4f} m2={s['latency_m2']:.4f}, "
          f"oq m1={s['oq_m1']:.4f} m2={s['oq_m2']:.4f}, max dev={s['max_dev_nominal']:.5f}")
    for kind, path in res.files.items():
        print(f"wrote {kind}: {path}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _config(args)
    rows = run_sweep(cfg, _floats(args.loads), args.schedulers.split(","),
                     seeds=_ints(args.seeds) if args.seeds else None)
    write_table(args.output, SUMMARY_COLUMNS, rows)
    print(f"wrote {len(rows)} rows to {args.output}")
    return 0


def cmd_replicate(args) -> int:
    cfg = _config(args)
    summary = run_replications(cfg, args.n_reps, workers=args.workers)
    if args.output:
        write_table(args.output, SUMMARY_COLUMNS, summary.rows)
    for c in NUMERIC_FIELDS:
        print(f"{c:18s} mean {summary.mean[c]:.6g}  var {summary.var[c]:.6g}")
    return 0


def cmd_validate(args) -> int:
    cfg = _config(args)
    verdict = check_admissibility(cfg.schedules, cfg.rates, witness=False)
    state = "admissible" if verdict.admissible else "NOT admissible (will run with a warning)"
    print(f"ok: {cfg.schedules.n_queues} queues, load {verdict.load:.4g}, {state}")
    return 0


def cmd_acceptance(args) -> int:
    results = run_suite(args.only, report=lambda line: print(line, flush=True))
    failed = [r.key for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed"
          + (f"; failed: {', '.join(failed)}" if failed else ""))
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fairsched", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def with_config(sp):
        sp.add_argument("config", help="JSON experiment config")
        sp.add_argument("--seed", type=int, help="override the config seed")
        return sp

    r = with_config(sub.add_parser("run", help="one seeded run; writes summary/timeseries/packets CSV"))
    r.add_argument("--output-dir", help="directory for CSV tables (default: config output_dir)")
    r.set_defaults(func=cmd_run)

    s = with_config(sub.add_parser("sweep", help="grid over loads and schedulers"))
    s.add_argument("--loads", default="0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9",
                   help="comma-separated uniform loads")
    s.add_argument("--schedulers", default="mucf,lqf,ocf", help="comma-separated scheduler kinds")
    s.add_argument("--seeds", help="comma-separated seeds (default: config seed)")
    s.add_argument("--output", required=True, help="summary CSV path")
    s.set_defaults(func=cmd_sweep)

    rp = with_config(sub.add_parser("replicate", help="independent runs with seeds seed+k"))
    rp.add_argument("--n-reps", type=int, required=True)
    rp.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    rp.add_argument("--output", help="per-replication summary CSV path")
    rp.set_defaults(func=cmd_replicate)

    v = with_config(sub.add_parser("validate-config", help="parse a config and check admissibility"))
    v.set_defaults(func=cmd_validate)

    a = sub.add_parser("acceptance", help="run the canned acceptance experiments")
    a.add_argument("--only", nargs="+", choices=list(CRITERIA), help="subset of criteria")
    a.set_defaults(func=cmd_acceptance)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ScheduleError, InvariantError, SizeGuardError, OSError,
            ValueError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
