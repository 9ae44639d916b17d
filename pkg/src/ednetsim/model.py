"""Domain types, configuration schema and validation for the ED network model.

Everything downstream (sampling, engine, calibration, optimizer, CLI) works on
the types defined here. Instances are treated as immutable after validation and
are safe to share across workers. Times are minutes unless a field name says
hours; a day is 1440 minutes.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MINUTES_PER_DAY = 1440.0

DIST_KINDS = ("exponential", "weibull", "gamma", "lognormal", "scaled_beta")
BLOCKING_RULES = ("all", "high", "low")
DESTINATION_RULES = ("nearest", "least_crowded")
ENTRY_MODES = ("seize", "arrival")


class ConfigError(Exception):
    """Raised when a configuration file cannot be parsed into the model."""


@dataclass(frozen=True)
class SeverityTag:
    """Triage severity class. Lower ordinal = more urgent."""

    label: str
    ordinal: int


@dataclass(frozen=True)
class TimeSlot:
    """One staffing slot of the day, [start_hour, end_hour) in hours."""

    name: str
    start_hour: float
    end_hour: float

    @property
    def start_minute(self) -> float:
        return self.start_hour * 60.0

    @property
    def end_minute(self) -> float:
        return self.end_hour * 60.0

    @property
    def duration_minutes(self) -> float:
        return (self.end_hour - self.start_hour) * 60.0


@dataclass(frozen=True)
class DistributionSpec:
    """Service-time law: a positive-support distribution plus an additive offset.

    Parameter conventions follow the simulation-package expression syntax the
    configuration values were fitted in:

    * ``exponential``: params = (mean,)
    * ``weibull``:     params = (scale, shape)
    * ``gamma``:       params = (scale, shape)
    * ``lognormal``:   params = (mean, stddev) of the lognormal itself
    * ``scaled_beta``: params = (scale, shape1, shape2), i.e. scale * Beta(a, b)

    Samples are ``offset + draw`` and therefore >= offset (all variants have
    nonnegative support).
    """

    kind: str
    params: tuple[float, ...]
    offset: float = 0.0

    def mean(self) -> float:
        """Analytic mean including the offset."""
        if self.kind == "exponential":
            base = self.params[0]
        elif self.kind == "weibull":
            scale, shape = self.params
            base = scale * math.gamma(1.0 + 1.0 / shape)
        elif self.kind == "gamma":
            scale, shape = self.params
            base = scale * shape
        elif self.kind == "lognormal":
            base = self.params[0]
        elif self.kind == "scaled_beta":
            scale, a, b = self.params
            base = scale * a / (a + b)
        else:
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        return self.offset + base

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        names = _PARAM_NAMES[self.kind]
        d.update({n: p for n, p in zip(names, self.params)})
        if self.offset:
            d["offset"] = self.offset
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DistributionSpec":
        kind = d.get("kind")
        if kind not in DIST_KINDS:
            raise ConfigError(f"unknown service distribution kind {kind!r}")
        try:
            params = tuple(float(d[n]) for n in _PARAM_NAMES[kind])
        except KeyError as e:
            raise ConfigError(f"{kind} distribution missing parameter {e}") from e
        return cls(kind=kind, params=params, offset=float(d.get("offset", 0.0)))


_PARAM_NAMES = {
    "exponential": ("mean",),
    "weibull": ("scale", "shape"),
    "gamma": ("scale", "shape"),
    "lognormal": ("mean", "stddev"),
    "scaled_beta": ("scale", "shape1", "shape2"),
}


@dataclass(frozen=True)
class ArrivalModel:
    """Piecewise-constant hourly arrival rates, one tuple per tag, one value per slot."""

    rates_per_hour: dict[str, tuple[float, ...]]

    def rates_for(self, tag_label: str) -> tuple[float, ...]:
        return self.rates_per_hour[tag_label]


@dataclass(frozen=True)
class EDConfig:
    """One emergency department: slot grid, arrivals, service laws, staffing bounds."""

    id: int
    slots: tuple[TimeSlot, ...]
    arrivals: ArrivalModel
    service: dict[str, tuple[DistributionSpec, ...]]  # tag label -> per-slot law
    lower: tuple[int, ...]
    upper: tuple[int, ...]
    as_is: tuple[int, ...]
    as_is_exempt: bool = False

    @property
    def n_slots(self) -> int:
        return len(self.slots)


@dataclass(frozen=True)
class ADPolicy:
    """One ambulance-diversion scheme.

    ``entry_evaluation`` selects when the initiating criterion (all resources
    busy) is checked: "seize" evaluates at every seize/release instant,
    "arrival" only at arrival epochs (sensitivity variant).
    """

    enabled: bool
    segment_hours: float = 6.0
    daily_max_hours: float | None = None
    blocking: str = "all"
    destination: str = "least_crowded"
    entry_evaluation: str = "seize"

    @property
    def segment_minutes(self) -> float:
        return self.segment_hours * 60.0

    @property
    def daily_max_minutes(self) -> float:
        return math.inf if self.daily_max_hours is None else self.daily_max_hours * 60.0

    def to_dict(self) -> dict:
        d: dict = {"enabled": self.enabled}
        if self.enabled:
            d.update(
                segment_hours=self.segment_hours,
                blocking=self.blocking,
                destination=self.destination,
            )
            if self.daily_max_hours is not None:
                d["daily_max_hours"] = self.daily_max_hours
            if self.entry_evaluation != "seize":
                d["entry_evaluation"] = self.entry_evaluation
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ADPolicy":
        return cls(
            enabled=bool(d.get("enabled", False)),
            segment_hours=float(d.get("segment_hours", 6.0)),
            daily_max_hours=(
                None if d.get("daily_max_hours") is None else float(d["daily_max_hours"])
            ),
            blocking=d.get("blocking", "all"),
            destination=d.get("destination", "least_crowded"),
            entry_evaluation=d.get("entry_evaluation", "seize"),
        )


NO_DIVERSION = ADPolicy(enabled=False)


@dataclass(frozen=True)
class RunDesign:
    """Replication design: how many runs, how long, how much warmup."""

    replications: int = 30
    horizon_days: int = 365
    warmup_hours: float = 48.0
    base_seed: int = 20240613

    @property
    def horizon_minutes(self) -> float:
        return self.horizon_days * MINUTES_PER_DAY

    @property
    def warmup_minutes(self) -> float:
        return self.warmup_hours * 60.0

    def replace(self, **kw) -> "RunDesign":
        cur = dict(
            replications=self.replications,
            horizon_days=self.horizon_days,
            warmup_hours=self.warmup_hours,
            base_seed=self.base_seed,
        )
        cur.update(kw)
        return RunDesign(**cur)


@dataclass(frozen=True)
class Allocation:
    """Integer staffing decision, flattened in (ed, slot) row-major order."""

    values: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))

    @classmethod
    def from_rows(cls, rows) -> "Allocation":
        return cls(tuple(v for row in rows for v in row))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.int64)

    def rows(self, net: "NetworkConfig") -> list[tuple[int, ...]]:
        out, k = [], 0
        for ed in net.eds:
            out.append(self.values[k : k + ed.n_slots])
            k += ed.n_slots
        return out

    def bump(self, index: int, delta: int) -> "Allocation":
        vals = list(self.values)
        vals[index] += delta
        return Allocation(tuple(vals))


@dataclass
class NetworkConfig:
    """The whole ED network: departments, travel times, thresholds, weights."""

    tags: tuple[SeverityTag, ...]
    eds: tuple[EDConfig, ...]
    travel: np.ndarray  # minutes, shape (n, n)
    thresholds: dict[str, float]  # tag label -> max admissible mean NVA (minutes)
    weights: dict[str, float]  # tag label -> objective weight
    description: str = ""

    @property
    def n_eds(self) -> int:
        return len(self.eds)

    @property
    def n_slots_total(self) -> int:
        return sum(ed.n_slots for ed in self.eds)

    @property
    def tag_labels(self) -> tuple[str, ...]:
        return tuple(t.label for t in self.tags)

    def slot_durations(self) -> np.ndarray:
        """d_ij in minutes, flattened (ed, slot) row-major."""
        return np.asarray(
            [s.duration_minutes for ed in self.eds for s in ed.slots], dtype=np.float64
        )

    def lower_array(self) -> np.ndarray:
        return np.asarray([v for ed in self.eds for v in ed.lower], dtype=np.int64)

    def upper_array(self) -> np.ndarray:
        return np.asarray([v for ed in self.eds for v in ed.upper], dtype=np.int64)

    def as_is_allocation(self) -> Allocation:
        return Allocation(tuple(v for ed in self.eds for v in ed.as_is))

    def slot_names(self) -> list[str]:
        return [f"s_{ed.id}{s.name}" for ed in self.eds for s in ed.slots]


@dataclass(frozen=True)
class SolverSettings:
    """Direct-search knobs: iteration budget, initial step, optional eval cap."""

    budget: int = 1000
    step_init: int = 2
    max_evaluations: int | None = None


@dataclass
class StudyConfig:
    """A full configuration file: network + named policies + solver + design."""

    network: NetworkConfig
    policies: dict[str, ADPolicy]
    solver: SolverSettings
    design: RunDesign


@dataclass(frozen=True)
class Violation:
    """One invariant breach found by validation. Data, not an exception."""

    code: str
    where: str
    message: str


def f2(alloc: Allocation, net: NetworkConfig) -> int:
    """Total resource-minutes of an allocation: sum of d_ij * s_ij, exact."""
    durations = [int(round(s.duration_minutes)) for ed in net.eds for s in ed.slots]
    if len(alloc.values) != len(durations):
        raise ValueError(
            f"allocation has {len(alloc.values)} entries, network has {len(durations)} slots"
        )
    return sum(d * s for d, s in zip(durations, alloc.values))


# ---------------------------------------------------------------------------
# validation


def validate_config(net: NetworkConfig) -> list[Violation]:
    """Check every structural invariant of a network; returns all breaches found."""
    out: list[Violation] = []
    add = lambda code, where, msg: out.append(Violation(code, where, msg))

    labels = [t.label for t in net.tags]
    if len(set(labels)) != len(labels):
        add("tag.duplicate_label", "network.tags", "tag labels must be unique")
    for t in net.tags:
        if t.ordinal < 1:
            add("tag.bad_ordinal", f"network.tags[{t.label}]", "ordinal must be >= 1")
    for lab in labels:
        if lab not in net.thresholds:
            add("threshold.missing", f"network.thresholds[{lab}]", "no threshold for tag")
        elif net.thresholds[lab] < 0:
            add("threshold.negative", f"network.thresholds[{lab}]", "threshold must be >= 0")
        if lab not in net.weights:
            add("weight.missing", f"network.weights[{lab}]", "no weight for tag")
        elif net.weights[lab] < 0:
            add("weight.negative", f"network.weights[{lab}]", "weight must be >= 0")

    tr = np.asarray(net.travel, dtype=float)
    n = net.n_eds
    if tr.shape != (n, n):
        add("travel.bad_shape", "network.travel", f"expected {n}x{n} matrix, got {tr.shape}")
    else:
        if np.any(np.diag(tr) != 0):
            add("travel.diagonal", "network.travel", "diagonal entries must be 0")
        if np.any(tr < 0):
            add("travel.negative", "network.travel", "travel times must be >= 0")
        bad = np.argwhere(tr != tr.T)
        if bad.size:
            i, j = (int(v) for v in bad[0])
            add(
                "travel.not_symmetric",
                f"network.travel[{i}][{j}]",
                f"travel[{i}][{j}]={tr[i, j]} but travel[{j}][{i}]={tr[j, i]}",
            )

    ids = [ed.id for ed in net.eds]
    if len(set(ids)) != len(ids):
        add("ed.duplicate_id", "eds", "ED ids must be unique")

    for ed in net.eds:
        loc = f"eds[{ed.id}]"
        m = ed.n_slots
        if m == 0:
            add("slots.empty", loc, "ED must define at least one slot")
            continue
        starts = [s.start_hour for s in ed.slots]
        ends = [s.end_hour for s in ed.slots]
        if starts[0] != 0 or ends[-1] != 24 or any(
            ends[j] != starts[j + 1] for j in range(m - 1)
        ) or any(e <= s for s, e in zip(starts, ends)):
            add("slots.not_partition", loc, "slots must partition [0, 24) in order")
        for name, vec in (("lower", ed.lower), ("upper", ed.upper), ("as_is", ed.as_is)):
            if len(vec) != m:
                add("slots.length_mismatch", f"{loc}.{name}", f"expected {m} entries")
        if len(ed.lower) == len(ed.upper) == len(ed.as_is) == m:
            for j in range(m):
                if not (0 <= ed.lower[j] <= ed.upper[j]):
                    add("bounds.inverted", f"{loc}.slot[{ed.slots[j].name}]",
                        f"need 0 <= l={ed.lower[j]} <= u={ed.upper[j]}")
                if ed.as_is[j] < 1:
                    add("asis.zero_servers", f"{loc}.slot[{ed.slots[j].name}]",
                        "as-is staffing must be >= 1")
                elif not ed.as_is_exempt and not (ed.lower[j] <= ed.as_is[j] <= ed.upper[j]):
                    add("asis.out_of_bounds", f"{loc}.slot[{ed.slots[j].name}]",
                        f"as_is={ed.as_is[j]} outside [{ed.lower[j]}, {ed.upper[j]}]")
        for lab in labels:
            rates = ed.arrivals.rates_per_hour.get(lab)
            if rates is None or len(rates) != m:
                add("rate.missing", f"{loc}.arrivals[{lab}]", "one rate per slot required")
            else:
                for j, r in enumerate(rates):
                    if not math.isfinite(r) or r < 0:
                        add("rate.negative", f"{loc}.arrivals[{lab}][{ed.slots[j].name}]",
                            f"rate {r} must be finite and >= 0")
            specs = ed.service.get(lab)
            if specs is None or len(specs) != m:
                add("service.missing", f"{loc}.service[{lab}]", "one law per slot required")
            else:
                for j, spec in enumerate(specs):
                    w = f"{loc}.service[{lab}][{ed.slots[j].name}]"
                    if spec.kind not in DIST_KINDS:
                        add("dist.unknown_kind", w, f"unknown kind {spec.kind!r}")
                    elif any(p <= 0 for p in spec.params):
                        add("dist.invalid_param", w, f"parameters must be > 0: {spec.params}")
                    if spec.offset < 0:
                        add("dist.negative_offset", w, f"offset {spec.offset} must be >= 0")
    return out


def check_allocation(alloc: Allocation, net: NetworkConfig) -> list[Violation]:
    """Bound check for a candidate allocation (used when feasibility is asserted)."""
    out: list[Violation] = []
    lo, up = net.lower_array(), net.upper_array()
    if len(alloc.values) != lo.size:
        return [Violation("alloc.bad_length", "allocation",
                          f"expected {lo.size} entries, got {len(alloc.values)}")]
    names = net.slot_names()
    for k, v in enumerate(alloc.values):
        if v < 1:
            out.append(Violation("alloc.zero_servers", names[k], f"s={v} must be >= 1"))
        if not (lo[k] <= v <= up[k]):
            out.append(Violation("alloc.out_of_bounds", names[k],
                                 f"s={v} outside [{lo[k]}, {up[k]}]"))
    return out


def validate_study(cfg: StudyConfig) -> list[Violation]:
    """Network invariants plus policy/design checks for a full config file."""
    out = validate_config(cfg.network)
    for pid, pol in cfg.policies.items():
        loc = f"policies[{pid}]"
        if pol.blocking not in BLOCKING_RULES:
            out.append(Violation("policy.bad_blocking", loc, f"blocking {pol.blocking!r}"))
        if pol.destination not in DESTINATION_RULES:
            out.append(Violation("policy.bad_destination", loc,
                                 f"destination {pol.destination!r}"))
        if pol.entry_evaluation not in ENTRY_MODES:
            out.append(Violation("policy.bad_entry_mode", loc,
                                 f"entry_evaluation {pol.entry_evaluation!r}"))
        if pol.enabled and pol.segment_hours <= 0:
            out.append(Violation("policy.bad_segment", loc, "segment_hours must be > 0"))
        if pol.enabled and pol.daily_max_hours is not None:
            if pol.daily_max_hours <= 0:
                out.append(Violation("policy.bad_cap", loc, "daily_max_hours must be > 0"))
            elif pol.segment_hours > pol.daily_max_hours:
                out.append(Violation("policy.segment_exceeds_cap", loc,
                                     f"segment {pol.segment_hours}h > cap {pol.daily_max_hours}h"))
    d = cfg.design
    if d.replications < 1:
        out.append(Violation("design.bad_replications", "design", "replications must be >= 1"))
    if d.horizon_days < 1:
        out.append(Violation("design.bad_horizon", "design", "horizon_days must be >= 1"))
    if d.horizon_days * 24 <= d.warmup_hours:
        out.append(Violation("design.warmup_exceeds_horizon", "design",
                             f"warmup {d.warmup_hours}h >= horizon {d.horizon_days * 24}h"))
    if cfg.solver.budget < 0:
        out.append(Violation("solver.bad_budget", "solver", "budget must be >= 0"))
    if cfg.solver.step_init < 1:
        out.append(Violation("solver.bad_step", "solver", "step_init must be >= 1"))
    return out


# ---------------------------------------------------------------------------
# (de)serialization


def network_to_dict(net: NetworkConfig) -> dict:
    return {
        "network": {
            "description": net.description,
            "tags": [{"label": t.label, "ordinal": t.ordinal} for t in net.tags],
            "thresholds": dict(net.thresholds),
            "weights": dict(net.weights),
            "travel_minutes": np.asarray(net.travel, dtype=float).tolist(),
        },
        "eds": [
            {
                "id": ed.id,
                "slots": [
                    {"name": s.name, "start_hour": s.start_hour, "end_hour": s.end_hour}
                    for s in ed.slots
                ],
                "arrival_rates_per_hour": {
                    lab: list(r) for lab, r in ed.arrivals.rates_per_hour.items()
                },
                "service": {
                    lab: [spec.to_dict() for spec in specs]
                    for lab, specs in ed.service.items()
                },
                "lower": list(ed.lower),
                "upper": list(ed.upper),
                "as_is": list(ed.as_is),
                **({"as_is_exempt": True} if ed.as_is_exempt else {}),
            }
            for ed in net.eds
        ],
    }


def study_to_dict(cfg: StudyConfig) -> dict:
    d = network_to_dict(cfg.network)
    d["policies"] = {pid: p.to_dict() for pid, p in cfg.policies.items()}
    solver = {"budget": cfg.solver.budget, "step_init": cfg.solver.step_init}
    if cfg.solver.max_evaluations is not None:
        solver["max_evaluations"] = cfg.solver.max_evaluations
    d["solver"] = solver
    d["design"] = {
        "replications": cfg.design.replications,
        "horizon_days": cfg.design.horizon_days,
        "warmup_hours": cfg.design.warmup_hours,
        "base_seed": cfg.design.base_seed,
    }
    return d


def network_from_dict(doc: dict) -> NetworkConfig:
    try:
        netsec = doc["network"]
        tags = tuple(
            SeverityTag(label=str(t["label"]), ordinal=int(t["ordinal"]))
            for t in netsec["tags"]
        )
        eds = []
        for e in doc["eds"]:
            slots = tuple(
                TimeSlot(str(s["name"]), float(s["start_hour"]), float(s["end_hour"]))
                for s in e["slots"]
            )
            rates = {
                lab: tuple(float(x) for x in v)
                for lab, v in e["arrival_rates_per_hour"].items()
            }
            service = {
                lab: tuple(DistributionSpec.from_dict(x) for x in v)
                for lab, v in e["service"].items()
            }
            eds.append(
                EDConfig(
                    id=int(e["id"]),
                    slots=slots,
                    arrivals=ArrivalModel(rates),
                    service=service,
                    lower=tuple(int(x) for x in e["lower"]),
                    upper=tuple(int(x) for x in e["upper"]),
                    as_is=tuple(int(x) for x in e["as_is"]),
                    as_is_exempt=bool(e.get("as_is_exempt", False)),
                )
            )
        return NetworkConfig(
            tags=tags,
            eds=tuple(eds),
            travel=np.asarray(netsec["travel_minutes"], dtype=float),
            thresholds={k: float(v) for k, v in netsec["thresholds"].items()},
            weights={k: float(v) for k, v in netsec["weights"].items()},
            description=str(netsec.get("description", "")),
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed network configuration: {exc}") from exc


def study_from_dict(doc: dict) -> StudyConfig:
    net = network_from_dict(doc)
    try:
        policies = {
            str(pid): ADPolicy.from_dict(p) for pid, p in doc.get("policies", {}).items()
        }
        sol = doc.get("solver", {})
        solver = SolverSettings(
            budget=int(sol.get("budget", 1000)),
            step_init=int(sol.get("step_init", 2)),
            max_evaluations=(
                None if sol.get("max_evaluations") is None else int(sol["max_evaluations"])
            ),
        )
        des = doc.get("design", {})
        design = RunDesign(
            replications=int(des.get("replications", 30)),
            horizon_days=int(des.get("horizon_days", 365)),
            warmup_hours=float(des.get("warmup_hours", 48.0)),
            base_seed=int(des.get("base_seed", 20240613)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"malformed configuration: {exc}") from exc
    return StudyConfig(network=net, policies=policies, solver=solver, design=design)


def load_study(path: str | Path) -> StudyConfig:
    p = Path(path)
    try:
        doc = json.loads(p.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {p}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p} is not valid JSON: {exc}") from exc
    return study_from_dict(doc)


def config_hash(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
