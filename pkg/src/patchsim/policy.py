"""Patch-set selection policies: traffic-aware, random, and none.

The traffic-aware policy monitors infrastructure traffic in ``[0, t_p)``,
ranks APs by the number of contact events routed through them (descending,
ties by ascending AP id), and patches the top p% of the AP roster at t_p.
The random baseline draws the same number of APs uniformly; the none
policy patches nothing.

Traffic volume is an event count: one infrastructure event contributes one
unit to every distinct AP on its path, and nothing to any AP it does not
touch. Direct events contribute nothing. Ranking metrics are pluggable via
``RANKING_METRICS``; ``volume`` is the only built-in (a betweenness-style
metric is a declared extension slot).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .trace import Trace

POLICY_NONE = "none"
POLICY_RANDOM = "random"
POLICY_TRAFFIC = "traffic"

_POLICY_KINDS = (POLICY_NONE, POLICY_RANDOM, POLICY_TRAFFIC)


@dataclass(frozen=True)
class PatchPolicy:
    """Policy tag plus ranking-metric tag (only used by ``traffic``)."""

    kind: str
    metric: str = "volume"

    def __post_init__(self):
        if self.kind not in _POLICY_KINDS:
            raise ValueError(f"unknown policy {self.kind!r}; expected one of {_POLICY_KINDS}")
        if self.metric not in RANKING_METRICS:
            raise ValueError(f"unknown ranking metric {self.metric!r}; "
                             f"available: {sorted(RANKING_METRICS)}")


def parse_policy(text: str) -> PatchPolicy:
    """Parse ``kind`` or ``kind:metric`` (e.g. ``traffic:volume``)."""
    kind, _, metric = text.partition(":")
    return PatchPolicy(kind.strip(), metric.strip() or "volume")


@dataclass(frozen=True)
class TrafficTally:
    """Per-AP event counts over the monitoring window ``[0, window_end)``.

    ``counts[x]`` covers every AP in the trace, zero-count APs included.
    """

    counts: tuple[int, ...]
    window_end: float


@dataclass(frozen=True)
class PatchPlan:
    """A patch schedule: which APs become patched, and when."""

    patch_time: float
    patched: frozenset[int]


def tally_traffic(trace: Trace, window_end: float) -> TrafficTally:
    """Count infrastructure events per AP with time strictly below the cutoff.

    An AP appearing several times in one event's path is counted once for
    that event. Events at exactly ``window_end`` are outside the window
    (monitoring ends when patching occurs).
    """
    if window_end < 0:
        raise ValueError("window_end must be >= 0")
    counts = [0] * trace.aps
    tbl = trace.event_table
    for time, direct, path_set in zip(tbl.times, tbl.is_direct, tbl.path_sets):
        if time >= window_end:
            break
        if direct:
            continue
        for ap in path_set:
            counts[ap] += 1
    return TrafficTally(counts=tuple(counts), window_end=window_end)


def rank_aps(tally: TrafficTally) -> list[int]:
    """APs in descending count order, ties broken by ascending AP id.

    Zero-count APs land at the tail in id order; the result is always a
    permutation of the full AP roster.
    """
    counts = np.asarray(tally.counts)
    order = np.lexsort((np.arange(len(counts)), -counts))
    return [int(x) for x in order]


def patch_count(n_aps: int, fraction: float) -> int:
    """Round-half-up of fraction% of the roster, computed exactly."""
    if not 0.0 <= fraction <= 100.0:
        raise ValueError(f"patch fraction must be in [0, 100], got {fraction}")
    return int(Fraction(fraction) * n_aps / 100 + Fraction(1, 2))


def select_patch_set(ranked: list[int], fraction: float) -> frozenset[int]:
    """Top round-half-up(fraction% · A) entries of a full-roster ranking."""
    k = patch_count(len(ranked), fraction)
    return frozenset(ranked[:k])


def make_plan(policy: PatchPolicy, trace: Trace, patch_time: float,
              fraction: float, rng: np.random.Generator | None = None) -> PatchPlan:
    """Build the patch plan a policy prescribes for one trial.

    ``rng`` is consumed only by the random policy. The traffic-aware plan
    is a pure function of the trace and (patch_time, fraction); the
    canonical random baseline is called with patch_time 0.
    """
    if patch_time < 0:
        raise ValueError("patch_time must be >= 0")
    if policy.kind == POLICY_NONE:
        return PatchPlan(patch_time=patch_time, patched=frozenset())
    if policy.kind == POLICY_RANDOM:
        if rng is None:
            raise ValueError("random policy needs an rng")
        k = patch_count(trace.aps, fraction)
        patched = frozenset(int(x) for x in rng.choice(trace.aps, size=k, replace=False))
        return PatchPlan(patch_time=patch_time, patched=patched)
    ranked = RANKING_METRICS[policy.metric](trace, patch_time)
    return PatchPlan(patch_time=patch_time, patched=select_patch_set(ranked, fraction))


def _rank_by_volume(trace: Trace, window_end: float) -> list[int]:
    return rank_aps(tally_traffic(trace, window_end))


# Ranking-metric registry; extension point for e.g. betweenness-style metrics.
RANKING_METRICS = {"volume": _rank_by_volume}
