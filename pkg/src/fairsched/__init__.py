"""Fair scheduling in constrained queueing networks.

The real network serves one feasible schedule per slot. A constraint-free shadow copy
of it supplies target departure times, and MUCF(f) serves the maximal schedule whose
head-of-line packets are collectively the most overdue.
"""

from .analysis import (RunMetrics, busy_cycle_report, check_admissibility, drift_by_backlog,
                       moment_report, moments, rate_stability_report)
from .core import (ArrivalProcess, InvariantError, NetworkState, OutputPolicy, Packet,
                   PacketLog, ScheduleError, advance_slot, sample_arrivals)
from .election import (IDENTITY, Ranking, UrgencyVector, WeightFunction, compute_urgencies,
                       eval_antiderivative, eval_weight, gm_rank, gm_scores, schedule_value)
from .experiment import (ConfigError, ExperimentConfig, Simulation, load_config, parse_config,
                         run_experiment, run_replications, run_sweep)
from .schedulers import (SchedulerKind, SchedulerSpec, TieBreak, max_weight_assignment,
                         max_weight_exhaustive, select_schedule)
from .schedules import (ConflictGraphSchedules, ExplicitSchedules, ScheduleSet, SizeGuardError,
                        SwitchSchedules, SwitchTopology, contains, enumerate_maximal, maximalize,
                        validate_set)
from .shadow import PolicyKind, ShadowCFN, ShadowPolicy

__version__ = "0.1.0"
