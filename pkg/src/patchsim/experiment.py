"""Monte Carlo harness: aggregation, grid sweeps, differencing, persistence.

Seed discipline: every trial draws from rng sub-streams keyed by
(master_seed, trial index, purpose tag), with separate purposes for the
seed-device choice, random-policy selection, and infection draws. Grid
cells and policies that share a master seed therefore share identical
seed devices and infection draws (common random numbers), which makes
cell-to-cell comparisons exact under the coupled-draw model while leaving
every cell's marginal distribution untouched.

CSV schemas (all floats serialized with full round-trip precision):

- grid:    ``policy,patch_time,fraction,trials,mean_fraction,stderr``
- optimal: ``fraction,best_patch_time,best_mean_fraction``
- series:  ``policy,patch_time,fraction,bin_time,mean_fraction``
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .epidemic import SimParams, TrialResult, run_trial
from .policy import POLICY_RANDOM, PatchPlan, make_plan
from .trace import Trace

# Purpose tags for the per-trial rng sub-streams.
PURPOSE_SEED_DEVICE = 0
PURPOSE_POLICY = 1
PURPOSE_INFECT = 2

GRID_HEADER = ["policy", "patch_time", "fraction", "trials", "mean_fraction", "stderr"]
OPTIMAL_HEADER = ["fraction", "best_patch_time", "best_mean_fraction"]
SERIES_HEADER = ["policy", "patch_time", "fraction", "bin_time", "mean_fraction"]

SERIES_BINS = 100


def trial_rng(master_seed: int, trial: int, purpose: int) -> np.random.Generator:
    """The sub-stream a given trial uses for a given purpose.

    Exposed so tests can verify the common-random-numbers discipline:
    the stream depends on nothing but (master_seed, trial, purpose).
    """
    return np.random.default_rng(np.random.SeedSequence([master_seed, trial, purpose]))


@dataclass(frozen=True)
class Aggregate:
    """Mean outcome over a batch of trials.

    ``stderr`` is the sample standard deviation (n-1 denominator) of the
    per-trial compromised fraction divided by sqrt(trials); 0.0 for a
    single trial. ``mean_series`` is the mean compromised fraction sampled
    on a fixed time-bin grid over the trace duration.
    """

    mean_fraction: float
    stderr: float
    trials: int
    mean_series: tuple[tuple[float, float], ...] = ()


@dataclass(frozen=True)
class GridResult:
    """(patch time x patch fraction) matrix of Aggregates for one policy."""

    patch_times: tuple[float, ...]
    fractions: tuple[float, ...]
    cells: tuple[tuple[Aggregate, ...], ...]  # indexed [time][fraction]
    policy: str
    params: SimParams

    def cell(self, time_idx: int, fraction_idx: int) -> Aggregate:
        return self.cells[time_idx][fraction_idx]


@dataclass(frozen=True)
class OptimalCurve:
    """Per-fraction best patch time and the mean fraction it achieves."""

    entries: tuple[tuple[float, float, float], ...]  # (fraction, time, mean)


def _bin_times(duration: float, n_bins: int) -> np.ndarray:
    return np.linspace(duration / n_bins, duration, n_bins) if duration > 0 \
        else np.zeros(n_bins)


def _series_counts(result: TrialResult, bin_times: np.ndarray) -> np.ndarray:
    """Compromised count sampled at each bin time (step function, right-closed)."""
    times = np.fromiter((t for t, _ in result.series), dtype=float,
                        count=len(result.series))
    return 1 + np.searchsorted(times, bin_times, side="right")


def run_trials(trace: Trace, params: SimParams, plan: PatchPlan | None = None,
               seed_device: int | None = None,
               trial_range: range | None = None) -> list[TrialResult]:
    """Run a batch of trials under the keyed-stream discipline.

    ``plan=None`` derives plans from ``params.policy``: deterministic
    policies are planned once and shared, the random policy is redrawn per
    trial from its own sub-stream. ``seed_device`` pins the initially
    compromised device (otherwise drawn per trial).
    """
    if trial_range is None:
        trial_range = range(params.trials)
    shared_plan = plan
    if shared_plan is None and params.policy.kind != POLICY_RANDOM:
        shared_plan = make_plan(params.policy, trace, params.patch_time,
                                params.patch_fraction)
    results = []
    for i in trial_range:
        if shared_plan is not None:
            trial_plan = shared_plan
        else:
            trial_plan = make_plan(params.policy, trace, params.patch_time,
                                   params.patch_fraction,
                                   trial_rng(params.master_seed, i, PURPOSE_POLICY))
        device = seed_device
        if device is None:
            device = int(trial_rng(params.master_seed, i, PURPOSE_SEED_DEVICE)
                         .integers(0, trace.devices))
        results.append(run_trial(trace, params, trial_plan,
                                 trial_rng(params.master_seed, i, PURPOSE_INFECT),
                                 seed_device=device))
    return results


def _reduce(trace: Trace, results: list[TrialResult], n_bins: int) -> Aggregate:
    d = trace.devices
    finals = np.array([r.final_compromised for r in results], dtype=float)
    mean = float(finals.mean()) / d
    stderr = float(finals.std(ddof=1) / np.sqrt(len(finals))) / d if len(finals) > 1 else 0.0
    bins = _bin_times(trace.duration, n_bins)
    acc = np.zeros(n_bins)
    for r in results:
        acc += _series_counts(r, bins)
    mean_series = tuple(zip((float(t) for t in bins),
                            (float(v) for v in acc / (len(results) * d))))
    return Aggregate(mean_fraction=mean, stderr=stderr, trials=len(results),
                     mean_series=mean_series)


def _trial_blocks(trials: int, workers: int) -> list[range]:
    per = -(-trials // workers)  # ceil
    return [range(lo, min(lo + per, trials)) for lo in range(0, trials, per)]


def _mc_block(args) -> list[TrialResult]:
    trace, params, seed_device, block = args
    return run_trials(trace, params, seed_device=seed_device, trial_range=block)


def monte_carlo(trace: Trace, params: SimParams, *, seed_device: int | None = None,
                threads: int = 1, n_bins: int = SERIES_BINS) -> Aggregate:
    """Aggregate ``params.trials`` independent trials.

    Deterministic for a fixed master seed regardless of ``threads``: trial
    streams are keyed by trial index and the reduction runs in trial
    order, so parallel execution is bit-identical to sequential.
    """
    if threads > 1 and params.trials > 1:
        blocks = _trial_blocks(params.trials, threads)
        with ProcessPoolExecutor(max_workers=min(threads, len(blocks))) as pool:
            parts = list(pool.map(_mc_block,
                                  [(trace, params, seed_device, b) for b in blocks]))
        results = [r for part in parts for r in part]
    else:
        results = run_trials(trace, params, seed_device=seed_device)
    return _reduce(trace, results, n_bins)


def device_probabilities(trace: Trace, params: SimParams, plan: PatchPlan,
                         seed_device: int) -> np.ndarray:
    """Monte Carlo per-device compromise frequencies for a fixed seed device.

    Companion estimator to :func:`patchsim.epidemic.exact_oracle`; uses the
    same infection sub-streams as :func:`monte_carlo`.
    """
    counts = np.zeros(trace.devices)
    for r in run_trials(trace, params, plan=plan, seed_device=seed_device):
        for d in r.compromised:
            counts[d] += 1
    return counts / params.trials


def _grid_cell(args) -> Aggregate:
    trace, params, n_bins = args
    return _reduce(trace, run_trials(trace, params), n_bins)


def sweep_grid(trace: Trace, base: SimParams, patch_times, fractions, *,
               threads: int = 1, n_bins: int = SERIES_BINS,
               pin_patch_time: float | None = None) -> GridResult:
    """One Monte Carlo aggregate per (patch time, fraction) cell.

    Every cell reuses the master seed, so cells are comparable under
    common random numbers. ``pin_patch_time`` computes every row at a
    fixed patch time (the canonical immediate-random baseline pins 0.0)
    while keeping the requested axis for alignment; the rows of such a
    grid are identical by construction.
    """
    patch_times = tuple(float(t) for t in patch_times)
    fractions = tuple(float(f) for f in fractions)
    if not patch_times or not fractions:
        raise ValueError("sweep axes must be non-empty")

    def cell_params(t: float, f: float) -> SimParams:
        t_eff = pin_patch_time if pin_patch_time is not None else t
        return replace(base, patch_time=t_eff, patch_fraction=f)

    if pin_patch_time is not None:
        row_times = (pin_patch_time,)
    else:
        row_times = patch_times

    jobs = [(trace, cell_params(t, f), n_bins) for t in row_times for f in fractions]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(threads, len(jobs))) as pool:
            flat = list(pool.map(_grid_cell, jobs))
    else:
        flat = [_grid_cell(j) for j in jobs]

    nf = len(fractions)
    rows = [tuple(flat[i * nf:(i + 1) * nf]) for i in range(len(row_times))]
    if pin_patch_time is not None:
        rows = rows * len(patch_times)
    return GridResult(patch_times=patch_times, fractions=fractions,
                      cells=tuple(rows), policy=base.policy.kind, params=base)


def diff_grid(a: GridResult, b: GridResult) -> GridResult:
    """Cell-wise mean difference a - b with combined standard errors."""
    if a.patch_times != b.patch_times or a.fractions != b.fractions:
        raise ValueError("grid axes differ")
    cells = []
    for row_a, row_b in zip(a.cells, b.cells):
        row = []
        for ca, cb in zip(row_a, row_b):
            if ca.trials != cb.trials:
                raise ValueError("grid trial counts differ")
            row.append(Aggregate(
                mean_fraction=ca.mean_fraction - cb.mean_fraction,
                stderr=float(np.hypot(ca.stderr, cb.stderr)),
                trials=ca.trials))
        cells.append(tuple(row))
    return GridResult(patch_times=a.patch_times, fractions=a.fractions,
                      cells=tuple(cells), policy=f"diff({a.policy}-{b.policy})",
                      params=a.params)


def optimal_patch_time(grid: GridResult) -> OptimalCurve:
    """Per fraction, the patch time minimizing the mean compromised fraction.

    Ties go to the earliest patch time on the axis.
    """
    entries = []
    for j, frac in enumerate(grid.fractions):
        best_i = min(range(len(grid.patch_times)),
                     key=lambda i: grid.cells[i][j].mean_fraction)
        entries.append((frac, grid.patch_times[best_i],
                        grid.cells[best_i][j].mean_fraction))
    return OptimalCurve(entries=tuple(entries))


def write_results(result, stream, *, params: SimParams | None = None) -> None:
    """Write a GridResult, Aggregate, or OptimalCurve as CSV.

    A bare Aggregate needs ``params`` for its policy/patch_time/fraction
    context and becomes a single grid-schema row. Row order is
    deterministic and floats round-trip exactly.
    """
    w = csv.writer(stream, lineterminator="\n")
    if isinstance(result, GridResult):
        w.writerow(GRID_HEADER)
        for i, t in enumerate(result.patch_times):
            for j, f in enumerate(result.fractions):
                cell = result.cells[i][j]
                w.writerow([result.policy, repr(t), repr(f), cell.trials,
                            repr(cell.mean_fraction), repr(cell.stderr)])
    elif isinstance(result, Aggregate):
        if params is None:
            raise TypeError("writing a bare Aggregate needs params= for context")
        w.writerow(GRID_HEADER)
        w.writerow([params.policy.kind, repr(float(params.patch_time)),
                    repr(float(params.patch_fraction)), result.trials,
                    repr(result.mean_fraction), repr(result.stderr)])
    elif isinstance(result, OptimalCurve):
        w.writerow(OPTIMAL_HEADER)
        for frac, time, mean in result.entries:
            w.writerow([repr(frac), repr(time), repr(mean)])
    else:
        raise TypeError(f"cannot serialize {type(result).__name__}")


def write_series(grid: GridResult, stream) -> None:
    """Write every cell's binned mean series as CSV."""
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(SERIES_HEADER)
    for i, t in enumerate(grid.patch_times):
        for j, f in enumerate(grid.fractions):
            for bin_time, mean in grid.cells[i][j].mean_series:
                w.writerow([grid.policy, repr(t), repr(f), repr(bin_time), repr(mean)])
