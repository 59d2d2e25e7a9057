"""Malware propagation over a contact trace with patched-AP blocking.

Devices follow SI dynamics: once compromised they stay compromised
(recovery exists only on infrastructure links, via patching). A contact
can transmit only when exactly one endpoint is compromised. Direct
contacts transmit with probability lambda_dir; infrastructure contacts
transmit with probability lambda_inf unless any AP on the (de-duplicated)
path is patched, in which case the propagation is blocked outright.

Random-draw discipline: every event owns an independent uniform draw keyed
by its position in the trace (a per-trial draw array), rather than pulling
from a shared sequential stream. Blocked or inert events therefore leave
every other event's draw unchanged, which makes coupled comparisons across
patch plans exact: with shared draws, enlarging the patched set (or
applying it earlier) can never increase the final compromised count.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass, field

import numpy as np

from .policy import PatchPlan, PatchPolicy
from .trace import Trace


class EnumerationCapError(RuntimeError):
    """Exact enumeration would exceed the configured event cap."""

    def __init__(self, n_events: int, cap: int):
        self.n_events = n_events
        self.cap = cap
        super().__init__(f"{n_events} potentially-infecting events exceed the "
                         f"enumeration cap of {cap}")


@dataclass(frozen=True)
class SimParams:
    """Per-experiment simulation parameters."""

    lambda_inf: float
    lambda_dir: float
    patch_time: float = 0.0
    patch_fraction: float = 0.0
    policy: PatchPolicy = PatchPolicy("none")
    trials: int = 1
    master_seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.lambda_inf <= 1.0 or not 0.0 <= self.lambda_dir <= 1.0:
            raise ValueError("infection probabilities must be in [0, 1]")
        if self.patch_time < 0:
            raise ValueError("patch_time must be >= 0")
        if not 0.0 <= self.patch_fraction <= 100.0:
            raise ValueError("patch_fraction must be in [0, 100]")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")


@dataclass
class EpidemicState:
    """Mutable state of one trial: who is compromised, what is patched."""

    compromised: set[int]
    patched: frozenset[int] = frozenset()
    patch_applied: bool = False
    clock: float = 0.0


@dataclass(frozen=True)
class Infection:
    """One successful transmission."""

    time: float
    device: int
    kind: str  # "D" or "I"


@dataclass(frozen=True)
class LinkInfections:
    """Infection counts split by link kind (the seed is counted in neither)."""

    direct: int = 0
    infrastructure: int = 0


@dataclass(frozen=True)
class TrialResult:
    """Outcome of a single trial.

    ``series`` records (time, compromised count) at every infection event,
    so counts rise by exactly 1 per entry and
    ``final_compromised == 1 + len(series)``.
    """

    seed_device: int
    final_compromised: int
    series: tuple[tuple[float, int], ...]
    infections_by_link: LinkInfections
    compromised: frozenset[int] = field(default=frozenset(), compare=False)


def init_state(trace: Trace, rng: np.random.Generator) -> EpidemicState:
    """Start a trial with one uniformly drawn compromised device."""
    if trace.devices < 1:
        raise ValueError("trace has no devices")
    seed = int(rng.integers(0, trace.devices))
    return EpidemicState(compromised={seed})


def process_event(state: EpidemicState, event, params: SimParams,
                  draw: float | None = None) -> Infection | None:
    """Apply one contact event to the state; returns the infection, if any.

    ``draw`` is the uniform [0, 1) value assigned to this event. It is read
    only when a transmission is actually possible (exactly one endpoint
    compromised, and the path not blocked by a patched AP), so inert and
    blocked events may be processed with ``draw=None``.
    """
    if event.time < state.clock:
        raise ValueError(f"event at {event.time} precedes clock {state.clock}")
    state.clock = event.time
    a_in = event.a in state.compromised
    b_in = event.b in state.compromised
    if a_in == b_in:
        return None
    if event.is_direct:
        lam = params.lambda_dir
    else:
        if state.patched and not state.patched.isdisjoint(event.path_set):
            return None  # blocked: no draw consumed
        lam = params.lambda_inf
    if draw < lam:
        target = event.b if a_in else event.a
        state.compromised.add(target)
        return Infection(time=event.time, device=target, kind=event.kind)
    return None


def run_trial(trace: Trace, params: SimParams, plan: PatchPlan,
              rng: np.random.Generator, seed_device: int | None = None) -> TrialResult:
    """Run one full trial over the trace.

    Consumes ``rng`` in a fixed order: the seed-device draw first (only
    when ``seed_device`` is None), then one uniform per event, assigned
    positionally. The patch plan is applied instantaneously before the
    first event with time >= plan.patch_time, so events at exactly the
    patch time already see the patched state.
    """
    if trace.devices < 1:
        raise ValueError("trace has no devices")
    if seed_device is None:
        seed_device = int(rng.integers(0, trace.devices))

    tbl = trace.event_table
    n_events = len(tbl.times)
    draws = rng.random(n_events).tolist()

    patch_at = bisect_left(tbl.times, plan.patch_time)
    patched = plan.patched

    compromised = {seed_device}
    add = compromised.add
    series: list[tuple[float, int]] = []
    n_direct = n_infra = 0

    times, ev_a, ev_b, is_direct, path_sets = (
        tbl.times, tbl.a, tbl.b, tbl.is_direct, tbl.path_sets)
    lam_dir, lam_inf = params.lambda_dir, params.lambda_inf

    for i in range(patch_at):  # pre-patch: nothing is blocked
        a_in = ev_a[i] in compromised
        if a_in == (ev_b[i] in compromised):
            continue
        if is_direct[i]:
            if draws[i] < lam_dir:
                add(ev_b[i] if a_in else ev_a[i])
                n_direct += 1
                series.append((times[i], len(compromised)))
        elif draws[i] < lam_inf:
            add(ev_b[i] if a_in else ev_a[i])
            n_infra += 1
            series.append((times[i], len(compromised)))

    check_block = bool(patched)
    for i in range(patch_at, n_events):
        a_in = ev_a[i] in compromised
        if a_in == (ev_b[i] in compromised):
            continue
        if is_direct[i]:
            if draws[i] < lam_dir:
                add(ev_b[i] if a_in else ev_a[i])
                n_direct += 1
                series.append((times[i], len(compromised)))
        else:
            if check_block and not patched.isdisjoint(path_sets[i]):
                continue
            if draws[i] < lam_inf:
                add(ev_b[i] if a_in else ev_a[i])
                n_infra += 1
                series.append((times[i], len(compromised)))

    return TrialResult(
        seed_device=seed_device,
        final_compromised=len(compromised),
        series=tuple(series),
        infections_by_link=LinkInfections(direct=n_direct, infrastructure=n_infra),
        compromised=frozenset(compromised),
    )


def _transmittable_events(trace: Trace, params: SimParams, plan: PatchPlan):
    """Events that could ever transmit: unblocked and with nonzero rate."""
    live = []
    for i, e in enumerate(trace.events):
        if e.is_direct:
            lam = params.lambda_dir
        else:
            if (e.time >= plan.patch_time and plan.patched
                    and not plan.patched.isdisjoint(e.path_set)):
                continue
            lam = params.lambda_inf
        if lam > 0.0:
            live.append((e.a, e.b, lam))
    return live


def exact_oracle(trace: Trace, params: SimParams, plan: PatchPlan,
                 seed_device: int, cap: int = 20) -> np.ndarray:
    """Exact per-device compromise probabilities by outcome enumeration.

    Conceptually enumerates all 2^E joint outcomes of the per-event
    Bernoulli draws (E = events that could transmit after static blocking
    and zero-rate filtering), propagates infection forward in time for
    each, and sums outcome probabilities. Implemented as a weighted DFS
    that sums out events which cannot transmit on the current branch, so
    the answer is identical to the full enumeration but usually far
    cheaper. Exact up to float rounding; raises
    :class:`EnumerationCapError` when E exceeds ``cap``.
    """
    if not 0 <= seed_device < trace.devices:
        raise ValueError(f"seed device {seed_device} out of range")
    live = _transmittable_events(trace, params, plan)
    if len(live) > cap:
        raise EnumerationCapError(len(live), cap)

    probs = np.zeros(trace.devices)
    n = len(live)

    def walk(j: int, infected: frozenset[int], weight: float) -> None:
        if weight == 0.0:
            return
        if j == n:
            for d in infected:
                probs[d] += weight
            return
        a, b, lam = live[j]
        a_in = a in infected
        if a_in == (b in infected):
            walk(j + 1, infected, weight)  # inert either way: sum the draw out
            return
        target = b if a_in else a
        walk(j + 1, infected | {target}, weight * lam)
        walk(j + 1, infected, weight * (1.0 - lam))

    walk(0, frozenset({seed_device}), 1.0)
    return probs
