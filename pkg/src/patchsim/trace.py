"""Contact trace data model, CSV parsing, validation, and synthetic generation.

A trace is a time-ordered log of undirected device-to-device contacts. Each
contact is either a direct proximity link or an infrastructure link routed
through one or more access points (APs). Devices and APs are integer ids in
dense 0-based ranges.

Trace CSV format, one event per line::

    time,device_a,device_b,KIND[,ap1[;ap2;...]]

where KIND is ``D`` (direct, exactly 4 fields) or ``I`` (infrastructure,
5th field is a semicolon-separated AP path). Times are decimal seconds.
Lines starting with ``#`` are comments; a ``# devices=N aps=M`` comment is
recognized as a roster hint so traces with silent trailing ids round-trip.
An optional header line is detected by a non-numeric first field.
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass, field

import numpy as np

DIRECT = "D"
INFRASTRUCTURE = "I"

_ROSTER_RE = re.compile(r"#\s*devices\s*=\s*(\d+)\s+aps\s*=\s*(\d+)\s*$")


class TraceFormatError(ValueError):
    """Malformed trace input; carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class ContactEvent:
    """One undirected contact between devices ``a`` and ``b`` at ``time``.

    ``kind`` is ``"D"`` (direct) or ``"I"`` (infrastructure); an
    infrastructure event carries the ordered AP ``path`` it traverses.
    Duplicate APs may appear in a path; de-duplication happens at the
    point of use (traffic tallies and patch blocking).
    """

    time: float
    a: int
    b: int
    kind: str = DIRECT
    path: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind not in (DIRECT, INFRASTRUCTURE):
            raise ValueError(f"unknown link kind {self.kind!r}")
        object.__setattr__(self, "path", tuple(self.path))

    @property
    def is_direct(self) -> bool:
        return self.kind == DIRECT

    @property
    def path_set(self) -> frozenset[int]:
        return frozenset(self.path)


@dataclass(frozen=True)
class Violation:
    """One invariant violation found by :func:`validate`."""

    index: int
    kind: str
    detail: str = ""


@dataclass(frozen=True)
class Trace:
    """Immutable, time-ordered contact log plus device/AP rosters.

    ``devices`` and ``aps`` are roster sizes; all event ids must fall in
    ``[0, devices)`` / ``[0, aps)``. ``device_id_map`` / ``ap_id_map`` give
    the original file id for each dense id when the source was compacted
    (``None`` means the identity mapping). Safe to share read-only across
    concurrent trials.
    """

    devices: int
    aps: int
    events: tuple[ContactEvent, ...]
    device_id_map: tuple[int, ...] | None = field(default=None, compare=False)
    ap_id_map: tuple[int, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))

    @property
    def duration(self) -> float:
        """Time of the last event (0.0 for an empty trace)."""
        return self.events[-1].time if self.events else 0.0

    def raw_device_id(self, dense_id: int) -> int:
        return self.device_id_map[dense_id] if self.device_id_map else dense_id

    def raw_ap_id(self, dense_id: int) -> int:
        return self.ap_id_map[dense_id] if self.ap_id_map else dense_id

    @property
    def event_table(self) -> "EventTable":
        """Flat per-event columns for tight simulation loops (cached)."""
        tbl = self.__dict__.get("_event_table")
        if tbl is None:
            tbl = EventTable.from_events(self.events)
            object.__setattr__(self, "_event_table", tbl)
        return tbl


class EventTable:
    """Columnar view of an event list: plain Python lists for speed."""

    __slots__ = ("times", "a", "b", "is_direct", "path_sets")

    def __init__(self, times, a, b, is_direct, path_sets):
        self.times = times
        self.a = a
        self.b = b
        self.is_direct = is_direct
        self.path_sets = path_sets

    @classmethod
    def from_events(cls, events) -> "EventTable":
        return cls(
            times=[e.time for e in events],
            a=[e.a for e in events],
            b=[e.b for e in events],
            is_direct=[e.is_direct for e in events],
            path_sets=[e.path_set for e in events],
        )


@dataclass(frozen=True)
class SyntheticParams:
    """Knobs for the synthetic trace generator.

    ``contact_rate`` is the mean number of contacts each device initiates
    per second (total event rate = n_devices * contact_rate). A contact is
    direct with probability ``direct_fraction``, otherwise it traverses a
    path of 1..max_path_len APs drawn i.i.d. from a truncated Zipf
    popularity law with exponent ``ap_zipf_alpha``. AP id equals popularity
    rank: AP 0 is the most popular.
    """

    n_devices: int
    n_aps: int
    duration: float
    contact_rate: float
    direct_fraction: float = 0.2
    ap_zipf_alpha: float = 1.2
    max_path_len: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.n_devices < 1 or self.n_aps < 1:
            raise ValueError("n_devices and n_aps must be >= 1")
        if self.duration < 0 or self.contact_rate < 0:
            raise ValueError("duration and contact_rate must be >= 0")
        if not 0.0 <= self.direct_fraction <= 1.0:
            raise ValueError("direct_fraction must be in [0, 1]")
        if self.ap_zipf_alpha <= 0:
            raise ValueError("ap_zipf_alpha must be > 0")
        if self.max_path_len < 1:
            raise ValueError("max_path_len must be >= 1")
        if self.n_devices < 2 and self.contact_rate > 0 and self.duration > 0:
            raise ValueError("contacts need at least 2 devices")


def _parse_id(text: str, what: str, line: int) -> int:
    try:
        value = int(text)
    except ValueError:
        raise TraceFormatError(f"bad {what} id {text!r}", line) from None
    if value < 0:
        raise TraceFormatError(f"negative {what} id {value}", line)
    return value


def parse_trace(source, *, compact_ids: bool = False) -> Trace:
    """Parse trace CSV from a text stream (or a string of CSV content).

    Events are stably sorted by time (equal-time events keep file order).
    By default ids are taken verbatim and rosters span ``0..max_id``;
    with ``compact_ids=True`` sparse ids are re-mapped to dense ranges in
    order of first appearance and the mapping is recorded on the Trace.

    Raises :class:`TraceFormatError` (with line number) on malformed
    lines, self-contacts, negative times, empty AP paths, or empty input.
    """
    stream = io.StringIO(source) if isinstance(source, str) else source

    rows = []  # (time, a, b, kind, path)
    hint_devices = hint_aps = 0
    saw_content = False
    for line_no, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            m = _ROSTER_RE.match(line)
            if m:
                hint_devices = int(m.group(1))
                hint_aps = int(m.group(2))
            continue
        fields = [f.strip() for f in line.split(",")]
        try:
            time = float(fields[0])
        except ValueError:
            if not saw_content:
                saw_content = True  # optional header line
                continue
            raise TraceFormatError(f"bad time {fields[0]!r}", line_no) from None
        saw_content = True
        if time < 0:
            raise TraceFormatError(f"negative time {time}", line_no)
        if len(fields) < 4:
            raise TraceFormatError("expected at least 4 fields", line_no)
        a = _parse_id(fields[1], "device", line_no)
        b = _parse_id(fields[2], "device", line_no)
        if a == b:
            raise TraceFormatError(f"self-contact on device {a}", line_no)
        kind = fields[3].upper()
        if kind == DIRECT:
            if len(fields) != 4:
                raise TraceFormatError("direct event must have exactly 4 fields", line_no)
            path = ()
        elif kind == INFRASTRUCTURE:
            if len(fields) != 5 or not fields[4]:
                raise TraceFormatError("infrastructure event needs an AP path", line_no)
            parts = [p for p in fields[4].split(";") if p.strip()]
            if not parts:
                raise TraceFormatError("empty AP path", line_no)
            path = tuple(_parse_id(p, "AP", line_no) for p in parts)
        else:
            raise TraceFormatError(f"unknown link kind {fields[3]!r}", line_no)
        rows.append((time, a, b, kind, path))

    if not rows:
        raise TraceFormatError("empty trace file")

    rows.sort(key=lambda r: r[0])  # stable: ties keep file order

    device_map = ap_map = None
    if compact_ids:
        dev_ids: dict[int, int] = {}
        ap_ids: dict[int, int] = {}
        remapped = []
        for time, a, b, kind, path in rows:
            da = dev_ids.setdefault(a, len(dev_ids))
            db = dev_ids.setdefault(b, len(dev_ids))
            dpath = tuple(ap_ids.setdefault(p, len(ap_ids)) for p in path)
            remapped.append((time, da, db, kind, dpath))
        rows = remapped
        device_map = tuple(dev_ids)  # insertion order == dense order
        ap_map = tuple(ap_ids)
        devices = len(dev_ids)
        aps = max(len(ap_ids), 1)
    else:
        devices = 1 + max(max(r[1], r[2]) for r in rows)
        aps = 1 + max((max(r[4]) for r in rows if r[4]), default=-1)
        devices = max(devices, hint_devices)
        aps = max(aps, hint_aps, 1)

    events = tuple(ContactEvent(t, a, b, kind, path) for t, a, b, kind, path in rows)
    return Trace(devices=devices, aps=aps, events=events,
                 device_id_map=device_map, ap_id_map=ap_map)


def load_trace(path: str, *, compact_ids: bool = False) -> Trace:
    """Parse a trace CSV file from disk."""
    with open(path, "r", encoding="utf-8") as fh:
        return parse_trace(fh, compact_ids=compact_ids)


def serialize_trace(trace: Trace, stream) -> None:
    """Write a Trace in the trace CSV format (dense ids, roster hint).

    Floats are written with full round-trip precision, so
    ``parse_trace(serialize_trace(t)) == t`` field-for-field.
    """
    stream.write(f"# devices={trace.devices} aps={trace.aps}\n")
    for e in trace.events:
        if e.is_direct:
            stream.write(f"{e.time!r},{e.a},{e.b},D\n")
        else:
            stream.write(f"{e.time!r},{e.a},{e.b},I,{';'.join(str(p) for p in e.path)}\n")


def trace_to_csv(trace: Trace) -> str:
    buf = io.StringIO()
    serialize_trace(trace, buf)
    return buf.getvalue()


def generate_synthetic(params: SyntheticParams) -> Trace:
    """Generate a synthetic contact trace; deterministic given the seed.

    Events form a Poisson process of total rate n_devices * contact_rate:
    the event count is Poisson, times are i.i.d. uniform over the duration
    (sorted), the initiating device is uniform and its partner uniform
    among the others. AP popularity follows a truncated Zipf law with AP 0
    the most popular, which gives synthetic traces a heavy-tailed traffic
    concentration for ranking policies to exploit.
    """
    rng = np.random.default_rng(params.seed)
    n = params.n_devices
    total_rate = n * params.contact_rate
    n_events = int(rng.poisson(total_rate * params.duration)) if total_rate > 0 else 0

    if n_events == 0:
        return Trace(devices=n, aps=params.n_aps, events=())

    times = np.sort(rng.uniform(0.0, params.duration, size=n_events))
    a = rng.integers(0, n, size=n_events)
    b = (a + rng.integers(1, n, size=n_events)) % n
    direct = rng.random(n_events) < params.direct_fraction

    # Truncated Zipf popularity over AP ids: P(ap = k) ~ (k + 1) ** -alpha.
    weights = np.arange(1, params.n_aps + 1, dtype=float) ** -params.ap_zipf_alpha
    cdf = np.cumsum(weights / weights.sum())
    path_lens = rng.integers(1, params.max_path_len + 1, size=n_events)
    needed = int(path_lens[~direct].sum())
    ap_draws = np.searchsorted(cdf, rng.random(needed), side="right")

    events = []
    pos = 0
    for i in range(n_events):
        if direct[i]:
            events.append(ContactEvent(float(times[i]), int(a[i]), int(b[i])))
        else:
            k = int(path_lens[i])
            path = tuple(int(x) for x in ap_draws[pos:pos + k])
            pos += k
            events.append(ContactEvent(float(times[i]), int(a[i]), int(b[i]),
                                       INFRASTRUCTURE, path))
    return Trace(devices=n, aps=params.n_aps, events=tuple(events))


def validate(trace: Trace) -> list[Violation]:
    """Check every Trace invariant; returns violations (empty if valid)."""
    out: list[Violation] = []
    prev_time = None
    for i, e in enumerate(trace.events):
        if e.time < 0:
            out.append(Violation(i, "negative-time", f"time {e.time}"))
        if prev_time is not None and e.time < prev_time:
            out.append(Violation(i, "unsorted", f"time {e.time} after {prev_time}"))
        prev_time = e.time
        if e.a == e.b:
            out.append(Violation(i, "self-contact", f"device {e.a}"))
        for dev in (e.a, e.b):
            if not 0 <= dev < trace.devices:
                out.append(Violation(i, "id-out-of-range", f"device {dev}"))
        if not e.is_direct and not e.path:
            out.append(Violation(i, "empty-path"))
        for ap in e.path:
            if not 0 <= ap < trace.aps:
                out.append(Violation(i, "id-out-of-range", f"AP {ap}"))
    return out
