"""Shared builders and oracles for the test suite."""

from __future__ import annotations

import math

import numpy as np

from ednetsim.model import (
    ADPolicy,
    Allocation,
    ArrivalModel,
    DistributionSpec,
    EDConfig,
    NetworkConfig,
    RunDesign,
    SeverityTag,
    TimeSlot,
)

THREE_SLOTS = (
    TimeSlot("A", 0, 8),
    TimeSlot("B", 8, 16),
    TimeSlot("C", 16, 24),
)
ONE_SLOT = (TimeSlot("ALL", 0, 24),)


def expo(mean, offset=0.0):
    return DistributionSpec("exponential", (mean,), offset)


def single_queue_net(lam_per_hour: float, mean_service_min: float, s: int,
                     upper: int = 20) -> NetworkConfig:
    """One ED, one slot, one tag, exponential service: an M/M/s testbed."""
    tag = SeverityTag("p", 1)
    ed = EDConfig(
        id=1,
        slots=ONE_SLOT,
        arrivals=ArrivalModel({"p": (lam_per_hour,)}),
        service={"p": (expo(mean_service_min),)},
        lower=(1,),
        upper=(upper,),
        as_is=(s,),
    )
    return NetworkConfig(
        tags=(tag,),
        eds=(ed,),
        travel=np.zeros((1, 1)),
        thresholds={"p": math.inf},
        weights={"p": 1.0},
    )


def erlang_c_wait(lam_per_min: float, mu_per_min: float, s: int) -> float:
    """Analytic M/M/s mean wait in queue (minutes); the criterion-2 oracle."""
    a = lam_per_min / mu_per_min
    rho = a / s
    assert rho < 1
    summ = sum(a**k / math.factorial(k) for k in range(s))
    last = a**s / math.factorial(s)
    p_wait = last / ((1 - rho) * summ + last)
    return p_wait / (s * mu_per_min - lam_per_min)


def two_tag_ed(ed_id: int, slots, rates_red, rates_yellow, mean_red, mean_yellow,
               lower, upper, as_is) -> EDConfig:
    m = len(slots)
    return EDConfig(
        id=ed_id,
        slots=tuple(slots),
        arrivals=ArrivalModel({"red": tuple(rates_red), "yellow": tuple(rates_yellow)}),
        service={
            "red": tuple(expo(mean_red) for _ in range(m)),
            "yellow": tuple(expo(mean_yellow) for _ in range(m)),
        },
        lower=tuple(lower),
        upper=tuple(upper),
        as_is=tuple(as_is),
    )


def random_scenario(rng: np.random.Generator):
    """Small random network + enabled AD policy, for randomized property tests."""
    n_eds = int(rng.integers(2, 5))
    n_slots = int(rng.integers(1, 4))
    bounds_h = np.sort(rng.choice(np.arange(1, 24), size=n_slots - 1, replace=False)) if n_slots > 1 else np.array([])
    edges = [0.0, *[float(b) for b in bounds_h], 24.0]
    slots = tuple(
        TimeSlot(f"S{j}", edges[j], edges[j + 1]) for j in range(n_slots)
    )
    tags = (SeverityTag("red", 1), SeverityTag("yellow", 2))
    eds = []
    for i in range(n_eds):
        s_vals = rng.integers(1, 4, size=n_slots)
        eds.append(
            EDConfig(
                id=i + 1,
                slots=slots,
                arrivals=ArrivalModel(
                    {
                        "red": tuple(float(r) for r in rng.uniform(0.0, 1.5, n_slots)),
                        "yellow": tuple(float(r) for r in rng.uniform(0.0, 4.0, n_slots)),
                    }
                ),
                service={
                    "red": tuple(expo(float(rng.uniform(20, 90))) for _ in range(n_slots)),
                    "yellow": tuple(expo(float(rng.uniform(20, 90))) for _ in range(n_slots)),
                },
                lower=tuple([1] * n_slots),
                upper=tuple([6] * n_slots),
                as_is=tuple(int(v) for v in s_vals),
            )
        )
    tr = rng.uniform(5.0, 45.0, size=(n_eds, n_eds))
    tr = np.round((tr + tr.T) / 2.0, 2)
    np.fill_diagonal(tr, 0.0)
    net = NetworkConfig(
        tags=tags,
        eds=tuple(eds),
        travel=tr,
        thresholds={"red": 5.0, "yellow": 15.0},
        weights={"red": 1.0, "yellow": 1.0},
    )
    seg = float(rng.choice([2.0, 4.0, 6.0, 8.0]))
    if rng.random() < 0.5:
        cap = None
    else:
        cap = seg * int(rng.integers(1, 4))
    policy = ADPolicy(
        enabled=True,
        segment_hours=seg,
        daily_max_hours=cap,
        blocking=str(rng.choice(["all", "high", "low"])),
        destination=str(rng.choice(["nearest", "least_crowded"])),
        entry_evaluation=str(rng.choice(["seize", "seize", "seize", "arrival"])),
    )
    design = RunDesign(
        replications=1,
        horizon_days=int(rng.integers(2, 6)),
        warmup_hours=float(rng.choice([0.0, 12.0, 24.0])),
        base_seed=int(rng.integers(0, 2**31)),
    )
    return net, policy, design


def pooled_mean_wait(stats_list) -> float:
    tot = sum(st.sum_nva.sum() for st in stats_list)
    cnt = sum(st.count.sum() for st in stats_list)
    return tot / cnt
