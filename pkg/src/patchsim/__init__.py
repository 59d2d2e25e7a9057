"""Trace-driven simulator of IoT malware propagation with AP patching."""

from .epidemic import (EnumerationCapError, EpidemicState, Infection,
                       LinkInfections, SimParams, TrialResult, exact_oracle,
                       init_state, process_event, run_trial)
from .experiment import (Aggregate, GridResult, OptimalCurve,
                         device_probabilities, diff_grid, monte_carlo,
                         optimal_patch_time, sweep_grid, trial_rng,
                         write_results, write_series)
from .policy import (PatchPlan, PatchPolicy, TrafficTally, make_plan,
                     parse_policy, rank_aps, select_patch_set, tally_traffic)
from .trace import (ContactEvent, SyntheticParams, Trace, TraceFormatError,
                    Violation, generate_synthetic, load_trace, parse_trace,
                    serialize_trace, trace_to_csv, validate)

__version__ = "0.1.0"
