"""Event-driven simulation of the ED network for one replication.

This module is the reference implementation: a readable event loop built from
small functions (arrival classification, destination selection, diversion
status updates, slot changes, statistics collection). `_kernel` contains a
numba translation of the same semantics for production runs; the two are held
bit-identical by differential tests.

Event ordering rules (shared with the kernel):

* the calendar is a min-heap keyed by (time, insertion sequence); pending
  external arrivals interleave with it: calendar events run first when their
  time is <= the next arrival's time;
* slot-boundary events are scheduled lazily (each boundary schedules the next
  one) and only for EDs with more than one slot;
* a replication stops at the horizon; whatever is still queued, in service or
  in transit stays unfinished and is reported in the conservation counters.

Diversion semantics:

* entry is evaluated whenever a seize or release leaves every resource busy
  (policy.entry_evaluation == "seize", the default) or when an arrival /
  materialization finds the ED saturated ("arrival" mode); a segment starts
  only if it fully fits the remaining daily budget, charged to the day the
  segment starts;
* the status is re-evaluated only at segment ends: free resource -> exit,
  otherwise extend by one segment if the budget allows, else exit;
* diverted patients take a single hop and are never re-diverted: eligibility
  of the destination (not on diversion) is checked at the decision instant.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .model import ADPolicy, Allocation, NetworkConfig, RunDesign
from .population import NetworkLayout, Population, build_layout, build_population

EV_BOUNDARY = 0
EV_DEPART = 1
EV_SEGEND = 2
EV_MATERIALIZE = 3

DEST_NEAREST = 0
DEST_LEAST_CROWDED = 1


@dataclass
class Patient:
    """Per-patient record, materialized only when tracing."""

    id: int
    tag_index: int
    origin_ed: int
    arrival_time: float
    service_draw: float
    diverted_to: int | None = None
    transport_time: float = 0.0
    visit_start: float | None = None
    departure: float | None = None


@dataclass(frozen=True)
class TraceEvent:
    time: float
    event: str
    ed: int  # ED index (not config id); -1 when not applicable
    patient: int  # patient index within the replication; -1 for status events
    tag: int  # tag index; -1 for status events


@dataclass
class ReplicationStats:
    """Per-cell visit statistics plus per-ED diversion and conservation counters.

    Cell arrays are indexed [global slot, tag]; the global slot encodes
    (ed, slot) row-major per the network layout. NVA and DTDT both span the
    original arrival to the first visit, so they coincide by construction;
    both sums are kept because reports exposes them separately.
    """

    count: np.ndarray
    sum_nva: np.ndarray
    sum_dtdt: np.ndarray
    max_nva: np.ndarray
    episodes: np.ndarray  # per ED
    diverted: np.ndarray  # per ED, patients sent away at the decision instant
    diversion_minutes: np.ndarray  # per ED
    arrivals: int = 0
    departed: int = 0
    in_queue: int = 0
    in_service: int = 0
    in_transit: int = 0

    @classmethod
    def zeros(cls, n_slots: int, n_tags: int, n_eds: int) -> "ReplicationStats":
        return cls(
            count=np.zeros((n_slots, n_tags), dtype=np.int64),
            sum_nva=np.zeros((n_slots, n_tags), dtype=np.float64),
            sum_dtdt=np.zeros((n_slots, n_tags), dtype=np.float64),
            max_nva=np.zeros((n_slots, n_tags), dtype=np.float64),
            episodes=np.zeros(n_eds, dtype=np.float64),
            diverted=np.zeros(n_eds, dtype=np.float64),
            diversion_minutes=np.zeros(n_eds, dtype=np.float64),
        )

    def conservation_ok(self) -> bool:
        return self.arrivals == self.departed + self.in_queue + self.in_service + self.in_transit


@dataclass
class PolicyContext:
    """Numeric form of an ADPolicy against one layout."""

    enabled: bool
    segment_minutes: float
    daily_cap_minutes: float  # inf when uncapped
    dest_rule: int
    divertible: np.ndarray  # bool per tag
    entry_at_arrival: bool

    @classmethod
    def build(cls, policy: ADPolicy, layout: NetworkLayout) -> "PolicyContext":
        return cls(
            enabled=policy.enabled,
            segment_minutes=policy.segment_minutes,
            daily_cap_minutes=policy.daily_max_minutes,
            dest_rule=DEST_NEAREST if policy.destination == "nearest" else DEST_LEAST_CROWDED,
            divertible=layout.divertible_mask(policy.blocking),
            entry_at_arrival=policy.entry_evaluation == "arrival",
        )


class EDState:
    """Mutable per-ED state during one replication."""

    __slots__ = (
        "index", "busy", "cap", "cur_slot", "queues", "qlen", "on_diversion",
        "segment_end", "used_budget", "budget_day", "episode_start",
        "episodes", "diverted", "diversion_minutes",
    )

    def __init__(self, index: int, n_tags: int, cap: int):
        self.index = index
        self.busy = 0
        self.cap = cap
        self.cur_slot = 0
        self.queues = [deque() for _ in range(n_tags)]
        self.qlen = 0
        self.on_diversion = False
        self.segment_end = 0.0
        self.used_budget = 0.0
        self.budget_day = -1
        self.episode_start = 0.0
        self.episodes = 0
        self.diverted = 0
        self.diversion_minutes = 0.0

    @property
    def saturated(self) -> bool:
        return self.busy >= self.cap

    def crowdedness(self) -> float:
        return (self.qlen + self.busy) / self.cap


def select_destination(
    origin: int, dest_rule: int, eds: list[EDState], travel: np.ndarray
) -> int | None:
    """Eligible ED (not on diversion) minimizing travel or crowdedness; None if none."""
    best, best_val = None, math.inf
    for d, st in enumerate(eds):
        if d == origin or st.on_diversion:
            continue
        val = travel[origin, d] if dest_rule == DEST_NEAREST else st.crowdedness()
        if val < best_val:
            best, best_val = d, val
    return best


def classify_arrival(
    origin: int, tag_index: int, eds: list[EDState], ctx: PolicyContext, travel: np.ndarray
):
    """Routing decision for a patient materializing at its origin ED.

    Returns ("divert", dest), ("serve", None) or ("queue", None). Diversion is
    checked first: an ED on diversion sends matching tags away even if a
    resource happens to be free mid-segment.
    """
    st = eds[origin]
    if ctx.enabled and st.on_diversion and ctx.divertible[tag_index]:
        dest = select_destination(origin, ctx.dest_rule, eds, travel)
        if dest is not None:
            return "divert", dest
    if st.busy < st.cap:
        return "serve", None
    return "queue", None


def try_enter_diversion(st: EDState, ctx: PolicyContext, now: float) -> bool:
    """Diversion entry check: all resources busy and a full segment fits the budget."""
    if not ctx.enabled or st.on_diversion or not st.saturated:
        return False
    day = int(now // 1440.0)
    if day != st.budget_day:
        st.budget_day = day
        st.used_budget = 0.0
    if st.used_budget + ctx.segment_minutes <= ctx.daily_cap_minutes:
        st.on_diversion = True
        st.segment_end = now + ctx.segment_minutes
        st.used_budget += ctx.segment_minutes
        st.episode_start = now
        st.episodes += 1
        return True
    return False


def reevaluate_diversion(st: EDState, ctx: PolicyContext, now: float) -> bool:
    """Segment-end check. Returns True when another segment starts, False on exit."""
    if st.busy < st.cap:
        _exit_diversion(st, now)
        return False
    day = int(now // 1440.0)
    if day != st.budget_day:
        st.budget_day = day
        st.used_budget = 0.0
    if st.used_budget + ctx.segment_minutes <= ctx.daily_cap_minutes:
        st.segment_end = now + ctx.segment_minutes
        st.used_budget += ctx.segment_minutes
        return True
    _exit_diversion(st, now)
    return False


def _exit_diversion(st: EDState, now: float) -> None:
    st.on_diversion = False
    st.diversion_minutes += now - st.episode_start


def collect(stats: ReplicationStats, gslot: int, tag_index: int, nva: float) -> None:
    """Record one completed wait: NVA (= DTDT) attributed to the origin cell."""
    stats.count[gslot, tag_index] += 1
    stats.sum_nva[gslot, tag_index] += nva
    stats.sum_dtdt[gslot, tag_index] += nva
    if nva > stats.max_nva[gslot, tag_index]:
        stats.max_nva[gslot, tag_index] = nva


def run_arrays(
    layout: NetworkLayout,
    capacity: np.ndarray,
    ctx: PolicyContext,
    horizon: float,
    warmup: float,
    a_time: np.ndarray,
    a_ed: np.ndarray,
    a_tag: np.ndarray,
    a_slot: np.ndarray,
    a_service: np.ndarray,
    trace: list[TraceEvent] | None = None,
    patients: list[Patient] | None = None,
) -> ReplicationStats:
    """Run one replication over pre-generated patient arrays (reference path)."""
    n_eds, n_tags = layout.n_eds, layout.n_tags
    S = layout.n_slots_total
    stats = ReplicationStats.zeros(S, n_tags, n_eds)
    eds = [EDState(e, n_tags, int(capacity[layout.slot_ptr[e]])) for e in range(n_eds)]
    tag_order = [int(k) for k in layout.tag_order]
    P = a_time.size

    if patients is not None:
        patients.extend(
            Patient(p, int(a_tag[p]), int(a_ed[p]), float(a_time[p]), float(a_service[p]))
            for p in range(P)
        )

    heap: list[tuple[float, int, int, int, int]] = []
    seq = 0

    def push(t: float, kind: int, ed: int, pid: int) -> None:
        nonlocal seq
        heapq.heappush(heap, (t, seq, kind, ed, pid))
        seq += 1

    def emit(t: float, name: str, ed: int, pid: int = -1, tag: int = -1) -> None:
        if trace is not None:
            trace.append(TraceEvent(t, name, ed, pid, tag))

    for e in range(n_eds):
        a = int(layout.slot_ptr[e])
        m = int(layout.slot_ptr[e + 1]) - a
        if m > 1:
            push(float(layout.slot_start_min[a + 1]), EV_BOUNDARY, e, 1)

    seizes = 0

    def seize(pid: int, e: int, t: float) -> None:
        nonlocal seizes
        st = eds[e]
        st.busy += 1
        seizes += 1
        if a_time[pid] >= warmup:
            collect(stats, int(a_slot[pid]), int(a_tag[pid]), t - float(a_time[pid]))
        push(t + float(a_service[pid]), EV_DEPART, e, pid)
        emit(t, "seize", e, pid, int(a_tag[pid]))
        if patients is not None:
            patients[pid].visit_start = t
            patients[pid].departure = t + float(a_service[pid])
        if not ctx.entry_at_arrival and try_enter_diversion(st, ctx, t):
            push(st.segment_end, EV_SEGEND, e, -1)
            emit(t, "ad_start", e)

    def dequeue(e: int) -> int:
        st = eds[e]
        for k in tag_order:
            if st.queues[k]:
                st.qlen -= 1
                return st.queues[k].popleft()
        raise RuntimeError("dequeue from empty queue")

    def enqueue(pid: int, e: int, t: float) -> None:
        st = eds[e]
        st.queues[int(a_tag[pid])].append(pid)
        st.qlen += 1
        emit(t, "queue", e, pid, int(a_tag[pid]))

    def arrival_entry_check(e: int, t: float) -> None:
        if ctx.entry_at_arrival and try_enter_diversion(eds[e], ctx, t):
            push(eds[e].segment_end, EV_SEGEND, e, -1)
            emit(t, "ad_start", e)

    ai = 0
    while True:
        t_arr = float(a_time[ai]) if ai < P else math.inf
        t_heap = heap[0][0] if heap else math.inf
        if t_heap <= t_arr:
            if t_heap >= horizon or not heap:
                break
            t, _, kind, e, pid = heapq.heappop(heap)
            st = eds[e]
            if kind == EV_BOUNDARY:
                a = int(layout.slot_ptr[e])
                m = int(layout.slot_ptr[e + 1]) - a
                base = t - float(layout.slot_start_min[a + pid])  # day start, exact
                st.cur_slot = pid
                st.cap = int(capacity[a + pid])
                if pid + 1 < m:
                    push(base + float(layout.slot_start_min[a + pid + 1]), EV_BOUNDARY, e, pid + 1)
                else:
                    push(base + 1440.0 + float(layout.slot_start_min[a]), EV_BOUNDARY, e, 0)
                while st.busy < st.cap and st.qlen > 0:
                    seize(dequeue(e), e, t)
            elif kind == EV_DEPART:
                st.busy -= 1
                stats.departed += 1
                emit(t, "release", e, pid, int(a_tag[pid]))
                if st.qlen > 0 and st.busy < st.cap:
                    seize(dequeue(e), e, t)
                elif not ctx.entry_at_arrival and try_enter_diversion(st, ctx, t):
                    push(st.segment_end, EV_SEGEND, e, -1)
                    emit(t, "ad_start", e)
            elif kind == EV_SEGEND:
                if reevaluate_diversion(st, ctx, t):
                    push(st.segment_end, EV_SEGEND, e, -1)
                else:
                    emit(t, "ad_end", e)
            else:  # EV_MATERIALIZE at destination e
                stats.in_transit -= 1
                emit(t, "materialize", e, pid, int(a_tag[pid]))
                if st.busy < st.cap:
                    seize(pid, e, t)
                else:
                    enqueue(pid, e, t)
                arrival_entry_check(e, t)
        else:
            if t_arr >= horizon or ai >= P:
                break
            t, pid = t_arr, ai
            ai += 1
            e = int(a_ed[pid])
            stats.arrivals += 1
            emit(t, "arrival", e, pid, int(a_tag[pid]))
            action, dest = classify_arrival(e, int(a_tag[pid]), eds, ctx, layout.travel)
            if action == "divert":
                eds[e].diverted += 1
                stats.in_transit += 1
                emit(t, "divert", e, pid, int(a_tag[pid]))
                emit(t, "divert_to", dest, pid, int(a_tag[pid]))
                push(t + float(layout.travel[e, dest]), EV_MATERIALIZE, dest, pid)
                if patients is not None:
                    patients[pid].diverted_to = dest
                    patients[pid].transport_time = float(layout.travel[e, dest])
            elif action == "serve":
                seize(pid, e, t)
                arrival_entry_check(e, t)
            else:
                enqueue(pid, e, t)
                arrival_entry_check(e, t)

    for e, st in enumerate(eds):
        if st.on_diversion:
            st.diversion_minutes += horizon - st.episode_start
        stats.episodes[e] = st.episodes
        stats.diverted[e] = st.diverted
        stats.diversion_minutes[e] = st.diversion_minutes
        stats.in_queue += st.qlen
    stats.in_service = seizes - stats.departed
    return stats


# ---------------------------------------------------------------------------
# public entry points


def run_population(
    pop: Population,
    alloc: Allocation,
    policy: ADPolicy,
    design: RunDesign,
    engine: str = "fast",
) -> list[ReplicationStats]:
    """Run every replication of a pre-built population under one allocation."""
    layout = pop.layout
    cap = alloc.as_array()
    if cap.size != layout.n_slots_total:
        raise ValueError("allocation does not match the network's slot count")
    if np.any(cap < 1):
        raise ValueError("allocations must staff every slot with at least 1 resource")
    ctx = PolicyContext.build(policy, layout)
    if engine == "fast":
        from . import _kernel

        return _kernel.run_batch(pop, cap, ctx, design)
    if engine != "reference":
        raise ValueError(f"unknown engine {engine!r}")
    out = []
    for rep in range(pop.n_reps):
        sl = pop.rep_slice(rep)
        out.append(
            run_arrays(
                layout, cap, ctx, design.horizon_minutes, design.warmup_minutes,
                pop.time[sl], pop.ed[sl], pop.tag[sl], pop.slot[sl], pop.service[sl],
            )
        )
    return out


def run_replication(
    net: NetworkConfig,
    alloc: Allocation,
    policy: ADPolicy,
    design: RunDesign,
    rep_index: int,
    trace: list[TraceEvent] | None = None,
    engine: str = "fast",
) -> ReplicationStats:
    """Simulate a single replication; deterministic in (base_seed, rep_index)."""
    one = design.replace(replications=1, base_seed=design.base_seed)
    pop = _single_rep_population(net, design, rep_index)
    layout = pop.layout
    cap = alloc.as_array()
    ctx = PolicyContext.build(policy, layout)
    if trace is not None or engine == "reference":
        sl = pop.rep_slice(0)
        return run_arrays(
            layout, cap, ctx, one.horizon_minutes, one.warmup_minutes,
            pop.time[sl], pop.ed[sl], pop.tag[sl], pop.slot[sl], pop.service[sl],
            trace=trace,
        )
    return run_population(pop, alloc, policy, one, engine=engine)[0]


def _single_rep_population(net: NetworkConfig, design: RunDesign, rep_index: int) -> Population:
    """Population containing only replication ``rep_index`` (same streams as the batch)."""
    return build_population(net, design, reps=[rep_index])
