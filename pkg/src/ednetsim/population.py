"""Pre-generated patient populations for common-random-number experiments.

A Population holds every arrival of every replication as flat arrays: time,
origin ED, tag, arrival slot and the service draw attached at creation. It
depends only on (network, design) - never on the allocation or policy - so the
same object is replayed under every candidate allocation, which is what keeps
sample-average comparisons between allocations low-noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import NetworkConfig, RunDesign
from .sampling import (
    PURPOSE_ARRIVALS,
    PURPOSE_SERVICE,
    StreamKey,
    draw_service,
    nhpp_times,
    stream_rng,
)


@dataclass(frozen=True)
class NetworkLayout:
    """Flattened numeric view of a network, shared by engine and optimizer.

    Slots are indexed globally in (ed, slot) row-major order; slot_ptr[e] ..
    slot_ptr[e+1] is the slot range of ED e.
    """

    n_eds: int
    n_tags: int
    slot_ptr: np.ndarray  # int64[n_eds + 1]
    slot_start_min: np.ndarray  # float64[S], within-day start of each slot
    slot_duration_min: np.ndarray  # float64[S]
    travel: np.ndarray  # float64[n_eds, n_eds]
    tag_ordinal: np.ndarray  # int64[n_tags]
    tag_order: np.ndarray  # int64[n_tags], tag indices sorted by (ordinal, index)
    ed_ids: tuple[int, ...]
    tag_labels: tuple[str, ...]

    @property
    def n_slots_total(self) -> int:
        return int(self.slot_ptr[-1])

    def slot_of(self, ed_index: int, minute_of_day: float) -> int:
        """Global slot index containing a within-day minute at one ED."""
        a, b = int(self.slot_ptr[ed_index]), int(self.slot_ptr[ed_index + 1])
        j = int(np.searchsorted(self.slot_start_min[a:b], minute_of_day, side="right")) - 1
        return a + max(j, 0)

    def divertible_mask(self, blocking: str) -> np.ndarray:
        """Which tags the blocking rule sends away: all / most urgent / least urgent."""
        if blocking == "all":
            return np.ones(self.n_tags, dtype=np.bool_)
        if blocking == "high":
            return self.tag_ordinal == self.tag_ordinal.min()
        if blocking == "low":
            return self.tag_ordinal == self.tag_ordinal.max()
        raise ValueError(f"unknown blocking rule {blocking!r}")


def build_layout(net: NetworkConfig) -> NetworkLayout:
    slot_ptr = np.zeros(net.n_eds + 1, dtype=np.int64)
    starts: list[float] = []
    durs: list[float] = []
    for i, ed in enumerate(net.eds):
        slot_ptr[i + 1] = slot_ptr[i] + ed.n_slots
        starts.extend(s.start_minute for s in ed.slots)
        durs.extend(s.duration_minutes for s in ed.slots)
    ordinal = np.asarray([t.ordinal for t in net.tags], dtype=np.int64)
    order = np.asarray(
        sorted(range(len(net.tags)), key=lambda k: (ordinal[k], k)), dtype=np.int64
    )
    return NetworkLayout(
        n_eds=net.n_eds,
        n_tags=len(net.tags),
        slot_ptr=slot_ptr,
        slot_start_min=np.asarray(starts, dtype=np.float64),
        slot_duration_min=np.asarray(durs, dtype=np.float64),
        travel=np.asarray(net.travel, dtype=np.float64),
        tag_ordinal=ordinal,
        tag_order=order,
        ed_ids=tuple(ed.id for ed in net.eds),
        tag_labels=net.tag_labels,
    )


@dataclass(frozen=True)
class Population:
    """All replications' patients, sorted by arrival time within each replication."""

    layout: NetworkLayout
    n_reps: int
    rep_ptr: np.ndarray  # int64[n_reps + 1]
    time: np.ndarray  # float64[P], minutes
    ed: np.ndarray  # int64[P], origin ED index
    tag: np.ndarray  # int64[P], tag index
    slot: np.ndarray  # int64[P], global slot index of the arrival at the origin
    service: np.ndarray  # float64[P], minutes, attached at creation

    @property
    def n_patients(self) -> int:
        return int(self.rep_ptr[-1])

    def rep_slice(self, rep: int) -> slice:
        return slice(int(self.rep_ptr[rep]), int(self.rep_ptr[rep + 1]))


def build_population(net: NetworkConfig, design: RunDesign, reps=None) -> Population:
    """Generate arrivals and service draws for the design's replications.

    ``reps`` selects explicit replication indices (default 0..N-1); the stream
    of a replication depends only on (base_seed, rep index), so a subset is
    identical to the corresponding slice of the full batch.
    """
    layout = build_layout(net)
    if reps is None:
        reps = range(design.replications)
    reps = list(reps)
    chunks_t: list[np.ndarray] = []
    chunks_e: list[np.ndarray] = []
    chunks_k: list[np.ndarray] = []
    chunks_j: list[np.ndarray] = []
    chunks_s: list[np.ndarray] = []
    rep_ptr = np.zeros(len(reps) + 1, dtype=np.int64)

    for ri, rep in enumerate(reps):
        rt, re, rk, rj, rs = [], [], [], [], []
        for ei, ed in enumerate(net.eds):
            a = int(layout.slot_ptr[ei])
            bounds = np.concatenate([layout.slot_start_min[a : a + ed.n_slots], [1440.0]])
            for ki, tag in enumerate(net.tags):
                arr_rng = stream_rng(
                    design.base_seed, StreamKey(rep, ed.id, PURPOSE_ARRIVALS, ki)
                )
                times = nhpp_times(
                    ed.arrivals.rates_for(tag.label), bounds, design.horizon_days, arr_rng
                )
                if times.size == 0:
                    continue
                local = np.searchsorted(bounds, times % 1440.0, side="right") - 1
                local = np.clip(local, 0, ed.n_slots - 1)
                svc_rng = stream_rng(
                    design.base_seed, StreamKey(rep, ed.id, PURPOSE_SERVICE, ki)
                )
                svc = np.empty(times.size, dtype=np.float64)
                specs = ed.service[tag.label]
                for j in range(ed.n_slots):
                    mask = local == j
                    cnt = int(mask.sum())
                    if cnt:
                        svc[mask] = draw_service(specs[j], svc_rng, cnt)
                rt.append(times)
                re.append(np.full(times.size, ei, dtype=np.int64))
                rk.append(np.full(times.size, ki, dtype=np.int64))
                rj.append((a + local).astype(np.int64))
                rs.append(svc)
        if rt:
            t = np.concatenate(rt)
            order = np.argsort(t, kind="stable")
            chunks_t.append(t[order])
            chunks_e.append(np.concatenate(re)[order])
            chunks_k.append(np.concatenate(rk)[order])
            chunks_j.append(np.concatenate(rj)[order])
            chunks_s.append(np.concatenate(rs)[order])
            rep_ptr[ri + 1] = rep_ptr[ri] + t.size
        else:
            rep_ptr[ri + 1] = rep_ptr[ri]

    empty = lambda dt: np.empty(0, dtype=dt)
    return Population(
        layout=layout,
        n_reps=len(reps),
        rep_ptr=rep_ptr,
        time=np.concatenate(chunks_t) if chunks_t else empty(np.float64),
        ed=np.concatenate(chunks_e) if chunks_e else empty(np.int64),
        tag=np.concatenate(chunks_k) if chunks_k else empty(np.int64),
        slot=np.concatenate(chunks_j) if chunks_j else empty(np.int64),
        service=np.concatenate(chunks_s) if chunks_s else empty(np.float64),
    )
