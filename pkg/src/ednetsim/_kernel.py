"""Compiled fast path of the replication engine.

Semantics are a function-for-function translation of `engine.run_arrays`; a
differential test keeps the two paths bit-identical. Replications run in
parallel (prange), each writing to its own output slice, so results do not
depend on thread scheduling.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

from .engine import ReplicationStats

EV_BOUNDARY = 0
EV_DEPART = 1
EV_SEGEND = 2
EV_MATERIALIZE = 3


@njit(cache=True)
def _heap_push(ht, hs, hk, he, hp, n, t, seq, kind, ed, pid):
    ht[n] = t
    hs[n] = seq
    hk[n] = kind
    he[n] = ed
    hp[n] = pid
    i = n
    while i > 0:
        par = (i - 1) >> 1
        if ht[par] > ht[i] or (ht[par] == ht[i] and hs[par] > hs[i]):
            ht[par], ht[i] = ht[i], ht[par]
            hs[par], hs[i] = hs[i], hs[par]
            hk[par], hk[i] = hk[i], hk[par]
            he[par], he[i] = he[i], he[par]
            hp[par], hp[i] = hp[i], hp[par]
            i = par
        else:
            break
    return n + 1


@njit(cache=True)
def _heap_pop(ht, hs, hk, he, hp, n):
    t = ht[0]
    seq = hs[0]
    kind = hk[0]
    ed = he[0]
    pid = hp[0]
    n -= 1
    ht[0] = ht[n]
    hs[0] = hs[n]
    hk[0] = hk[n]
    he[0] = he[n]
    hp[0] = hp[n]
    i = 0
    while True:
        l = 2 * i + 1
        if l >= n:
            break
        r = l + 1
        c = l
        if r < n and (ht[r] < ht[l] or (ht[r] == ht[l] and hs[r] < hs[l])):
            c = r
        if ht[c] < ht[i] or (ht[c] == ht[i] and hs[c] < hs[i]):
            ht[c], ht[i] = ht[i], ht[c]
            hs[c], hs[i] = hs[i], hs[c]
            hk[c], hk[i] = hk[i], hk[c]
            he[c], he[i] = he[i], he[c]
            hp[c], hp[i] = hp[i], hp[c]
            i = c
        else:
            break
    return t, seq, kind, ed, pid, n


@njit(cache=True)
def _select_destination(origin, dest_rule, n_eds, on_div, busy, qlen, cap, travel):
    best = -1
    best_val = np.inf
    for d in range(n_eds):
        if d == origin or on_div[d]:
            continue
        if dest_rule == 0:
            val = travel[origin, d]
        else:
            val = (qlen[d] + busy[d]) / cap[d]
        if val < best_val:
            best = d
            best_val = val
    return best


@njit(cache=True)
def _try_enter(
    e, t, busy, cap, on_div, seg_end, used_bud, bud_day, epi_start, div_stats,
    seg_min, cap_min, ht, hs, hk, he, hp, hn, seq,
):
    """Diversion entry check; pushes the segment-end event when entering."""
    if on_div[e] or busy[e] < cap[e]:
        return hn, seq
    day = np.int64(t // 1440.0)
    if day != bud_day[e]:
        bud_day[e] = day
        used_bud[e] = 0.0
    if used_bud[e] + seg_min <= cap_min:
        on_div[e] = True
        seg_end[e] = t + seg_min
        used_bud[e] += seg_min
        epi_start[e] = t
        div_stats[e, 0] += 1.0
        hn = _heap_push(ht, hs, hk, he, hp, hn, seg_end[e], seq, EV_SEGEND, e, -1)
        seq += 1
    return hn, seq


@njit(cache=True)
def _seize(
    pid, e, t, busy, a_time, a_tag, a_slot, a_service, warmup,
    count, sum_nva, sum_dtdt, max_nva,
    check_entry, cap, on_div, seg_end, used_bud, bud_day, epi_start, div_stats,
    seg_min, cap_min, ht, hs, hk, he, hp, hn, seq,
):
    """Start service: collect the wait, schedule departure, maybe enter diversion."""
    busy[e] += 1
    if a_time[pid] >= warmup:
        g = a_slot[pid]
        k = a_tag[pid]
        nva = t - a_time[pid]
        count[g, k] += 1
        sum_nva[g, k] += nva
        sum_dtdt[g, k] += nva
        if nva > max_nva[g, k]:
            max_nva[g, k] = nva
    hn = _heap_push(ht, hs, hk, he, hp, hn, t + a_service[pid], seq, EV_DEPART, e, pid)
    seq += 1
    if check_entry:
        hn, seq = _try_enter(
            e, t, busy, cap, on_div, seg_end, used_bud, bud_day, epi_start, div_stats,
            seg_min, cap_min, ht, hs, hk, he, hp, hn, seq,
        )
    return hn, seq


@njit(cache=True)
def _dequeue(e, n_tags, tag_order, qhead, qtail, qnext, qlen):
    for r in range(n_tags):
        k = tag_order[r]
        pid = qhead[e, k]
        if pid >= 0:
            qhead[e, k] = qnext[pid]
            if qhead[e, k] < 0:
                qtail[e, k] = -1
            qlen[e] -= 1
            return pid
    return -1


@njit(cache=True)
def _enqueue(pid, e, k, qhead, qtail, qnext, qlen):
    if qtail[e, k] >= 0:
        qnext[qtail[e, k]] = pid
    else:
        qhead[e, k] = pid
    qtail[e, k] = pid
    qnext[pid] = -1
    qlen[e] += 1


@njit(cache=True)
def _run_rep(
    a_time, a_ed, a_tag, a_slot, a_service,
    slot_ptr, slot_start, capacity, travel, tag_order, divertible,
    enabled, seg_min, cap_min, dest_rule, entry_at_arrival,
    horizon, warmup,
    count, sum_nva, sum_dtdt, max_nva, div_stats, cons,
):
    P = a_time.shape[0]
    n_eds = slot_ptr.shape[0] - 1
    n_tags = tag_order.shape[0]
    check_at_seize = enabled and not entry_at_arrival
    check_at_arrival = enabled and entry_at_arrival

    hcap = P + 2 * n_eds + 8
    ht = np.empty(hcap, dtype=np.float64)
    hs = np.empty(hcap, dtype=np.int64)
    hk = np.empty(hcap, dtype=np.int64)
    he = np.empty(hcap, dtype=np.int64)
    hp = np.empty(hcap, dtype=np.int64)
    hn = 0
    seq = 0

    busy = np.zeros(n_eds, dtype=np.int64)
    cap = np.zeros(n_eds, dtype=np.int64)
    qlen = np.zeros(n_eds, dtype=np.int64)
    qhead = np.full((n_eds, n_tags), -1, dtype=np.int64)
    qtail = np.full((n_eds, n_tags), -1, dtype=np.int64)
    qnext = np.full(P, -1, dtype=np.int64)
    on_div = np.zeros(n_eds, dtype=np.bool_)
    seg_end = np.zeros(n_eds, dtype=np.float64)
    used_bud = np.zeros(n_eds, dtype=np.float64)
    bud_day = np.full(n_eds, -1, dtype=np.int64)
    epi_start = np.zeros(n_eds, dtype=np.float64)

    for e in range(n_eds):
        cap[e] = capacity[slot_ptr[e]]
        if slot_ptr[e + 1] - slot_ptr[e] > 1:
            hn = _heap_push(ht, hs, hk, he, hp, hn,
                            slot_start[slot_ptr[e] + 1], seq, EV_BOUNDARY, e, 1)
            seq += 1

    arrivals = 0
    departed = 0
    seizes = 0
    in_transit = 0

    ai = 0
    while True:
        t_arr = a_time[ai] if ai < P else np.inf
        t_heap = ht[0] if hn > 0 else np.inf

        if hn > 0 and t_heap <= t_arr:
            if t_heap >= horizon:
                break
            t, _, kind, e, pid, hn = _heap_pop(ht, hs, hk, he, hp, hn)

            if kind == EV_BOUNDARY:
                a = slot_ptr[e]
                m = slot_ptr[e + 1] - a
                base = t - slot_start[a + pid]  # exact day start
                cap[e] = capacity[a + pid]
                if pid + 1 < m:
                    hn = _heap_push(ht, hs, hk, he, hp, hn,
                                    base + slot_start[a + pid + 1], seq, EV_BOUNDARY, e, pid + 1)
                else:
                    hn = _heap_push(ht, hs, hk, he, hp, hn,
                                    base + 1440.0 + slot_start[a], seq, EV_BOUNDARY, e, 0)
                seq += 1
                while busy[e] < cap[e] and qlen[e] > 0:
                    pid2 = _dequeue(e, n_tags, tag_order, qhead, qtail, qnext, qlen)
                    seizes += 1
                    hn, seq = _seize(
                        pid2, e, t, busy, a_time, a_tag, a_slot, a_service, warmup,
                        count, sum_nva, sum_dtdt, max_nva,
                        check_at_seize, cap, on_div, seg_end, used_bud, bud_day,
                        epi_start, div_stats, seg_min, cap_min,
                        ht, hs, hk, he, hp, hn, seq,
                    )

            elif kind == EV_DEPART:
                busy[e] -= 1
                departed += 1
                if qlen[e] > 0 and busy[e] < cap[e]:
                    pid2 = _dequeue(e, n_tags, tag_order, qhead, qtail, qnext, qlen)
                    seizes += 1
                    hn, seq = _seize(
                        pid2, e, t, busy, a_time, a_tag, a_slot, a_service, warmup,
                        count, sum_nva, sum_dtdt, max_nva,
                        check_at_seize, cap, on_div, seg_end, used_bud, bud_day,
                        epi_start, div_stats, seg_min, cap_min,
                        ht, hs, hk, he, hp, hn, seq,
                    )
                elif check_at_seize:
                    hn, seq = _try_enter(
                        e, t, busy, cap, on_div, seg_end, used_bud, bud_day,
                        epi_start, div_stats, seg_min, cap_min,
                        ht, hs, hk, he, hp, hn, seq,
                    )

            elif kind == EV_SEGEND:
                if busy[e] < cap[e]:
                    on_div[e] = False
                    div_stats[e, 2] += t - epi_start[e]
                else:
                    day = np.int64(t // 1440.0)
                    if day != bud_day[e]:
                        bud_day[e] = day
                        used_bud[e] = 0.0
                    if used_bud[e] + seg_min <= cap_min:
                        seg_end[e] = t + seg_min
                        used_bud[e] += seg_min
                        hn = _heap_push(ht, hs, hk, he, hp, hn,
                                        seg_end[e], seq, EV_SEGEND, e, -1)
                        seq += 1
                    else:
                        on_div[e] = False
                        div_stats[e, 2] += t - epi_start[e]

            else:  # EV_MATERIALIZE at destination e
                in_transit -= 1
                if busy[e] < cap[e]:
                    seizes += 1
                    hn, seq = _seize(
                        pid, e, t, busy, a_time, a_tag, a_slot, a_service, warmup,
                        count, sum_nva, sum_dtdt, max_nva,
                        check_at_seize, cap, on_div, seg_end, used_bud, bud_day,
                        epi_start, div_stats, seg_min, cap_min,
                        ht, hs, hk, he, hp, hn, seq,
                    )
                else:
                    _enqueue(pid, e, a_tag[pid], qhead, qtail, qnext, qlen)
                if check_at_arrival:
                    hn, seq = _try_enter(
                        e, t, busy, cap, on_div, seg_end, used_bud, bud_day,
                        epi_start, div_stats, seg_min, cap_min,
                        ht, hs, hk, he, hp, hn, seq,
                    )

        else:
            if ai >= P or t_arr >= horizon:
                break
            t = t_arr
            pid = ai
            ai += 1
            e = a_ed[pid]
            arrivals += 1
            k = a_tag[pid]

            routed = False
            if enabled and on_div[e] and divertible[k]:
                dest = _select_destination(e, dest_rule, n_eds, on_div, busy, qlen, cap, travel)
                if dest >= 0:
                    div_stats[e, 1] += 1.0
                    in_transit += 1
                    hn = _heap_push(ht, hs, hk, he, hp, hn,
                                    t + travel[e, dest], seq, EV_MATERIALIZE, dest, pid)
                    seq += 1
                    routed = True
            if not routed:
                if busy[e] < cap[e]:
                    seizes += 1
                    hn, seq = _seize(
                        pid, e, t, busy, a_time, a_tag, a_slot, a_service, warmup,
                        count, sum_nva, sum_dtdt, max_nva,
                        check_at_seize, cap, on_div, seg_end, used_bud, bud_day,
                        epi_start, div_stats, seg_min, cap_min,
                        ht, hs, hk, he, hp, hn, seq,
                    )
                else:
                    _enqueue(pid, e, k, qhead, qtail, qnext, qlen)
                if check_at_arrival:
                    hn, seq = _try_enter(
                        e, t, busy, cap, on_div, seg_end, used_bud, bud_day,
                        epi_start, div_stats, seg_min, cap_min,
                        ht, hs, hk, he, hp, hn, seq,
                    )

    for e in range(n_eds):
        if on_div[e]:
            div_stats[e, 2] += horizon - epi_start[e]
        cons[2] += qlen[e]
    cons[0] = arrivals
    cons[1] = departed
    cons[3] = seizes - departed
    cons[4] = in_transit


@njit(cache=True, parallel=True)
def _simulate_batch(
    rep_ptr,
    a_time, a_ed, a_tag, a_slot, a_service,
    slot_ptr, slot_start, capacity, travel, tag_order, divertible,
    enabled, seg_min, cap_min, dest_rule, entry_at_arrival,
    horizon, warmup,
    count, sum_nva, sum_dtdt, max_nva, div_stats, cons,
):
    n_reps = rep_ptr.shape[0] - 1
    for r in prange(n_reps):
        lo = rep_ptr[r]
        hi = rep_ptr[r + 1]
        _run_rep(
            a_time[lo:hi], a_ed[lo:hi], a_tag[lo:hi], a_slot[lo:hi], a_service[lo:hi],
            slot_ptr, slot_start, capacity, travel, tag_order, divertible,
            enabled, seg_min, cap_min, dest_rule, entry_at_arrival,
            horizon, warmup,
            count[r], sum_nva[r], sum_dtdt[r], max_nva[r], div_stats[r], cons[r],
        )


def run_batch(pop, capacity, ctx, design) -> list[ReplicationStats]:
    """Run all replications of a population through the compiled kernel."""
    lay = pop.layout
    R = pop.n_reps
    S = lay.n_slots_total
    T = lay.n_tags
    count = np.zeros((R, S, T), dtype=np.int64)
    sum_nva = np.zeros((R, S, T), dtype=np.float64)
    sum_dtdt = np.zeros((R, S, T), dtype=np.float64)
    max_nva = np.zeros((R, S, T), dtype=np.float64)
    div_stats = np.zeros((R, lay.n_eds, 3), dtype=np.float64)
    cons = np.zeros((R, 5), dtype=np.int64)
    _simulate_batch(
        pop.rep_ptr,
        pop.time, pop.ed, pop.tag, pop.slot, pop.service,
        lay.slot_ptr, lay.slot_start_min, np.asarray(capacity, dtype=np.int64),
        lay.travel, lay.tag_order, ctx.divertible,
        ctx.enabled, ctx.segment_minutes, ctx.daily_cap_minutes,
        ctx.dest_rule, ctx.entry_at_arrival,
        design.horizon_minutes, design.warmup_minutes,
        count, sum_nva, sum_dtdt, max_nva, div_stats, cons,
    )
    out = []
    for r in range(R):
        out.append(ReplicationStats(
            count=count[r], sum_nva=sum_nva[r], sum_dtdt=sum_dtdt[r], max_nva=max_nva[r],
            episodes=div_stats[r, :, 0].copy(),
            diverted=div_stats[r, :, 1].copy(),
            diversion_minutes=div_stats[r, :, 2].copy(),
            arrivals=int(cons[r, 0]), departed=int(cons[r, 1]), in_queue=int(cons[r, 2]),
            in_service=int(cons[r, 3]), in_transit=int(cons[r, 4]),
        ))
    return out
