"""Seeded random streams, service-time sampling and exact NHPP arrival generation.

Every stream is derived from (base_seed, replication, ed, purpose, tag) through
a SeedSequence spawn key, so distinct keys are statistically independent and the
same key always reproduces the identical sequence. That is what makes common
random numbers work: the patient population of a replication depends only on
the seed, never on the staffing allocation or the diversion policy under test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import DistributionSpec, EDConfig, SeverityTag

PURPOSE_ARRIVALS = 0
PURPOSE_SERVICE = 1


@dataclass(frozen=True)
class StreamKey:
    """Identity of one random stream."""

    replication: int
    ed: int
    purpose: int  # PURPOSE_ARRIVALS or PURPOSE_SERVICE
    tag_index: int


@dataclass(frozen=True)
class ArrivalEvent:
    time: float  # minutes since horizon start
    ed: int
    tag: SeverityTag


def stream_rng(base_seed: int, key: StreamKey) -> np.random.Generator:
    """Independent generator for one (replication, ed, purpose, tag) stream."""
    ss = np.random.SeedSequence(
        base_seed, spawn_key=(key.replication, key.ed, key.purpose, key.tag_index)
    )
    return np.random.default_rng(ss)


def lognormal_underlying(mean: float, stddev: float) -> tuple[float, float]:
    """Normal (mu, sigma) whose lognormal has the given arithmetic mean and stddev."""
    var_ratio = 1.0 + (stddev / mean) ** 2
    mu = math.log(mean / math.sqrt(var_ratio))
    sigma = math.sqrt(math.log(var_ratio))
    return mu, sigma


def draw_service(spec: DistributionSpec, rng: np.random.Generator, size: int) -> np.ndarray:
    """Vector of service times (minutes) from one law; every value >= offset."""
    kind, p = spec.kind, spec.params
    if kind == "exponential":
        base = rng.exponential(p[0], size)
    elif kind == "weibull":
        base = p[0] * rng.weibull(p[1], size)
    elif kind == "gamma":
        # numpy's generator applies the shape-boost transform for shape < 1,
        # which keeps small-shape sampling exact.
        base = rng.gamma(p[1], p[0], size)
    elif kind == "lognormal":
        mu, sigma = lognormal_underlying(p[0], p[1])
        base = rng.lognormal(mu, sigma, size)
    elif kind == "scaled_beta":
        base = p[0] * rng.beta(p[1], p[2], size)
    else:
        raise ValueError(f"unknown distribution kind {kind!r}")
    return spec.offset + base


def sample_service(spec: DistributionSpec, rng: np.random.Generator) -> float:
    """One service draw in minutes."""
    return float(draw_service(spec, rng, 1)[0])


def nhpp_times(
    rates_per_hour,
    slot_bounds_minutes,
    horizon_days: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Exact piecewise-constant NHPP sample over ``horizon_days`` days.

    ``rates_per_hour`` has one rate per slot; ``slot_bounds_minutes`` are the
    m+1 slot boundaries of one day (0 ... 1440). The daily rate pattern repeats
    every 24 h. Implementation inverts the piecewise-linear cumulative rate:
    conditional on the total count, event positions on the cumulative scale are
    iid uniform, so no thinning loop is needed. Returned times are strictly
    increasing and lie in [0, horizon).
    """
    rates = np.asarray(rates_per_hour, dtype=float) / 60.0  # per minute
    bounds = np.asarray(slot_bounds_minutes, dtype=float)
    durs = np.diff(bounds)
    if rates.shape != durs.shape:
        raise ValueError("need one rate per slot")
    cum = np.concatenate([[0.0], np.cumsum(rates * durs)])  # at slot bounds
    lam_day = cum[-1]
    if lam_day == 0.0:
        return np.empty(0, dtype=float)
    total = lam_day * horizon_days
    n = rng.poisson(total)
    u = np.sort(rng.uniform(0.0, total, n))
    day, rem = np.divmod(u, lam_day)
    j = np.searchsorted(cum, rem, side="right") - 1
    j = np.clip(j, 0, len(durs) - 1)
    times = day * 1440.0 + bounds[j] + (rem - cum[j]) / rates[j]
    times = np.minimum(times, np.nextafter(horizon_days * 1440.0, 0.0))
    # float ties are astronomically rare; drop them to keep strict ordering
    if n > 1:
        keep = np.concatenate([[True], np.diff(times) > 0.0])
        times = times[keep]
    return times


def gen_arrivals(
    ed: EDConfig,
    tags: tuple[SeverityTag, ...],
    horizon_days: int,
    rngs: dict[str, np.random.Generator],
) -> list[ArrivalEvent]:
    """Ordered arrival events of one ED over the horizon, all tags merged."""
    bounds = np.array([s.start_minute for s in ed.slots] + [1440.0])
    events: list[ArrivalEvent] = []
    for tag in tags:
        times = nhpp_times(
            ed.arrivals.rates_for(tag.label), bounds, horizon_days, rngs[tag.label]
        )
        events.extend(ArrivalEvent(float(t), ed.id, tag) for t in times)
    events.sort(key=lambda ev: ev.time)
    return events
