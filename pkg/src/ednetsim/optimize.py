"""Sample-average evaluation and derivative-free bi-objective integer search.

The search maintains a mutually nondominated archive under feasibility-first
dominance, probes +-step along every coordinate of a selected archive point
(step 2, halving to 1 on failure), and stops at the iteration budget or when
every archive point is exhausted. It only needs a black-box evaluator, so the
same code runs on analytic test problems and on the simulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import (
    ADPolicy,
    Allocation,
    NetworkConfig,
    RunDesign,
    f2 as exact_f2,
)
from .engine import ReplicationStats, run_population
from .population import Population, build_layout, build_population


class OutOfBoundsError(ValueError):
    """An allocation outside its box bounds was submitted for evaluation."""


@dataclass(frozen=True, eq=False)
class Evaluation:
    """One evaluated allocation: objectives, constraint violation, SAA detail."""

    alloc: tuple[int, ...]
    f1: float
    f2: float
    viol_norm: float
    violations: np.ndarray | None = None  # per (global slot, tag), clipped at 0
    cell_means: np.ndarray | None = None  # SAA mean NVA per (global slot, tag)
    f1_reps: np.ndarray | None = None  # per-replication f1, for paired comparisons
    n_reps: int = 0

    @property
    def feasible(self) -> bool:
        return self.viol_norm == 0.0


def dominates(a: Evaluation, b: Evaluation) -> bool:
    """Constrained dominance: feasibility first, then componentwise objectives."""
    if a.viol_norm == 0.0 and b.viol_norm > 0.0:
        return True
    if a.viol_norm > 0.0 and b.viol_norm == 0.0:
        return False
    if a.viol_norm != b.viol_norm:
        return a.viol_norm < b.viol_norm
    return a.f1 <= b.f1 and a.f2 <= b.f2 and (a.f1 < b.f1 or a.f2 < b.f2)


class ParetoArchive:
    """Mutually nondominated set of evaluations, unique per allocation."""

    def __init__(self):
        self.entries: list[Evaluation] = []

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def insert(self, e: Evaluation) -> bool:
        """Insert if nondominated; prunes entries the newcomer dominates."""
        for x in self.entries:
            if x.alloc == e.alloc or dominates(x, e):
                return False
        self.entries = [x for x in self.entries if not dominates(e, x)]
        self.entries.append(e)
        return True

    def sorted_by_cost(self) -> list[Evaluation]:
        return sorted(self.entries, key=lambda e: (e.f2, e.f1, e.alloc))

    def feasible_points(self) -> list[tuple[float, float]]:
        return [(e.f1, e.f2) for e in self.sorted_by_cost() if e.feasible]


def hypervolume_2d(points, ref: tuple[float, float]) -> float:
    """Area dominated by (f1, f2) minimization points up to the reference point."""
    ref1, ref2 = ref
    pts = sorted(p for p in points if p[0] < ref1 and p[1] < ref2)
    front: list[tuple[float, float]] = []
    best_f2 = math.inf
    for p1, p2 in sorted(pts):  # f1 ascending, keep strictly improving f2
        if p2 < best_f2:
            front.append((p1, p2))
            best_f2 = p2
    front.sort(key=lambda p: p[1])  # f2 ascending, f1 descending
    hv = 0.0
    for i, (p1, p2) in enumerate(front):
        nxt = front[i + 1][1] if i + 1 < len(front) else ref2
        hv += (nxt - p2) * (ref1 - p1)
    return hv


@dataclass
class SearchResult:
    archive: ParetoArchive
    history: list[list[tuple[float, float, float]]]  # (f1, f2, viol) per iteration
    n_evaluations: int
    iterations: int
    exhausted: bool
    start_projected: bool = False

    def front(self) -> list[Evaluation]:
        return self.archive.sorted_by_cost()


def pareto_search(
    evaluate,
    lower,
    upper,
    start,
    budget: int,
    step_init: int = 2,
    max_evals: int | None = None,
) -> SearchResult:
    """Archive-based coordinate direct search on the integer lattice.

    One iteration probes +-step e_k around one archive point selected FIFO
    among those whose step is not exhausted. A batch with no archive insertion
    halves the point's step; a failure at step 1 retires the point. Probes
    falling outside the box are skipped, and each lattice point is evaluated at
    most once (a point rejected by the archive once can never re-enter later:
    dominance is transitive).
    """
    if budget < 0:
        raise ValueError("budget must be >= 0")
    lower = np.asarray(lower, dtype=np.int64)
    upper = np.asarray(upper, dtype=np.int64)
    n = lower.size
    start = tuple(int(v) for v in start)
    if len(start) != n or any(start[i] < lower[i] or start[i] > upper[i] for i in range(n)):
        raise OutOfBoundsError(f"start point {start} outside bounds")

    cache: dict[tuple[int, ...], Evaluation] = {}

    def run(x: tuple[int, ...]) -> Evaluation:
        ev = evaluate(x)
        cache[x] = ev
        return ev

    archive = ParetoArchive()
    archive.insert(run(start))
    steps: dict[tuple[int, ...], int] = {start: step_init}
    queue: list[tuple[int, ...]] = [start]
    history: list[list[tuple[float, float, float]]] = []
    iterations = 0
    exhausted = False

    while iterations < budget:
        center = None
        while queue:
            cand = queue.pop(0)
            if cand in steps and any(e.alloc == cand for e in archive):
                center = cand
                break
            steps.pop(cand, None)
        if center is None:
            exhausted = True
            break
        if max_evals is not None and len(cache) >= max_evals:
            break
        iterations += 1
        step = steps[center]
        inserted_any = False
        for coord in range(n):
            for sgn in (1, -1):
                v = center[coord] + sgn * step
                if v < lower[coord] or v > upper[coord]:
                    continue
                probe = center[:coord] + (v,) + center[coord + 1 :]
                if probe in cache:
                    continue
                ev = run(probe)
                if archive.insert(ev):
                    inserted_any = True
                    steps[probe] = step_init
                    queue.append(probe)
                if max_evals is not None and len(cache) >= max_evals:
                    break
            if max_evals is not None and len(cache) >= max_evals:
                break
        still_in = any(e.alloc == center for e in archive)
        if not still_in:
            steps.pop(center, None)
        elif inserted_any:
            queue.append(center)
        elif step > 1:
            steps[center] = step // 2
            queue.append(center)
        else:
            steps.pop(center, None)  # retired at step 1 with no insertion
        history.append([(e.f1, e.f2, e.viol_norm) for e in archive.sorted_by_cost()])

    if not exhausted and not any(
        c in steps and any(e.alloc == c for e in archive) for c in queue
    ):
        exhausted = True
    return SearchResult(
        archive=archive,
        history=history,
        n_evaluations=len(cache),
        iterations=iterations,
        exhausted=exhausted,
    )


# ---------------------------------------------------------------------------
# simulation-backed evaluation


def replication_f1(
    stats: list[ReplicationStats], weights: np.ndarray
) -> np.ndarray:
    """Per-replication weighted sum of cell-mean NVA times."""
    out = np.empty(len(stats), dtype=np.float64)
    for r, st in enumerate(stats):
        m = np.where(st.count > 0, st.sum_nva / np.maximum(st.count, 1), 0.0)
        out[r] = float((m * weights[None, :]).sum())
    return out


class SimEvaluator:
    """Black-box objective for the DES: CRN across every allocation it sees.

    The patient population is generated once per (network, design) and replayed
    under every candidate allocation, so two evaluations differ only through
    the staffing decision.
    """

    def __init__(
        self,
        net: NetworkConfig,
        policy: ADPolicy,
        design: RunDesign,
        engine: str = "fast",
        population: Population | None = None,
    ):
        self.net = net
        self.policy = policy
        self.design = design
        self.engine = engine
        self.layout = population.layout if population is not None else build_layout(net)
        self.lower = net.lower_array()
        self.upper = net.upper_array()
        self.weights = np.asarray(
            [net.weights[lab] for lab in net.tag_labels], dtype=np.float64
        )
        self.thresholds = np.asarray(
            [net.thresholds[lab] for lab in net.tag_labels], dtype=np.float64
        )
        self._population = population
        self.n_evaluations = 0

    @property
    def population(self) -> Population:
        if self._population is None:
            self._population = build_population(self.net, self.design)
        return self._population

    def check_bounds(self, values) -> None:
        vals = np.asarray(values, dtype=np.int64)
        if vals.size != self.lower.size:
            raise OutOfBoundsError(
                f"allocation has {vals.size} entries, expected {self.lower.size}"
            )
        if np.any(vals < self.lower) or np.any(vals > self.upper):
            raise OutOfBoundsError(f"allocation {tuple(vals)} violates box bounds")

    def __call__(self, values) -> Evaluation:
        self.check_bounds(values)
        alloc = Allocation(tuple(int(v) for v in values))
        stats = run_population(
            self.population, alloc, self.policy, self.design, engine=self.engine
        )
        self.n_evaluations += 1
        return self.evaluation_from_stats(alloc, stats)

    def evaluation_from_stats(
        self, alloc: Allocation, stats: list[ReplicationStats]
    ) -> Evaluation:
        M = np.stack(
            [
                np.where(st.count > 0, st.sum_nva / np.maximum(st.count, 1), 0.0)
                for st in stats
            ]
        )
        cell_means = M.mean(axis=0)
        f1 = float((cell_means * self.weights[None, :]).sum())
        violations = np.maximum(cell_means - self.thresholds[None, :], 0.0)
        f1_reps = (M * self.weights[None, None, :]).sum(axis=(1, 2))
        return Evaluation(
            alloc=alloc.values,
            f1=f1,
            f2=float(exact_f2(alloc, self.net)),
            viol_norm=float(violations.sum()),
            violations=violations,
            cell_means=cell_means,
            f1_reps=f1_reps,
            n_reps=len(stats),
        )


def eval_point(
    alloc: Allocation,
    net: NetworkConfig,
    policy: ADPolicy,
    design: RunDesign,
    engine: str = "fast",
    population: Population | None = None,
) -> Evaluation:
    """Evaluate one allocation: SAA objectives and threshold violations."""
    ev = SimEvaluator(net, policy, design, engine=engine, population=population)
    return ev(alloc.values)


def solve(
    net: NetworkConfig,
    policy: ADPolicy,
    design: RunDesign,
    start: Allocation | None = None,
    budget: int = 1000,
    step_init: int = 2,
    max_evals: int | None = None,
    engine: str = "fast",
    population: Population | None = None,
) -> SearchResult:
    """Direct search over staffing allocations for one diversion policy."""
    evaluator = SimEvaluator(net, policy, design, engine=engine, population=population)
    if start is None:
        start = net.as_is_allocation()
    vals = np.asarray(start.values, dtype=np.int64)
    projected = False
    lo, up = net.lower_array(), net.upper_array()
    if np.any(vals < lo) or np.any(vals > up):
        vals = np.clip(vals, lo, up)
        projected = True
    result = pareto_search(
        evaluator, lo, up, tuple(int(v) for v in vals), budget,
        step_init=step_init, max_evals=max_evals,
    )
    result.start_projected = projected
    return result


@dataclass
class CompareResult:
    fronts: dict[str, SearchResult]
    dominance: list[dict]

    def front_points(self, policy_id: str) -> list[Evaluation]:
        return self.fronts[policy_id].front()


def dominance_intervals(fronts: dict[str, list[Evaluation]]) -> list[dict]:
    """Which policy attains the lowest f1 on each stretch of the f2 axis.

    For every f2 breakpoint, each policy is represented by its best feasible f1
    among points with cost <= f2 (its staircase). Runs of breakpoints with the
    same winner set are merged.
    """
    feas = {
        pid: sorted((e.f2, e.f1) for e in pts if e.feasible)
        for pid, pts in fronts.items()
    }
    breakpoints = sorted({c for pts in feas.values() for c, _ in pts})
    if not breakpoints:
        return []
    rows = []
    for b in breakpoints:
        best: dict[str, float] = {}
        for pid, pts in feas.items():
            vals = [f1 for c, f1 in pts if c <= b]
            if vals:
                best[pid] = min(vals)
        if not best:
            continue
        top = min(best.values())
        winners = sorted(pid for pid, v in best.items() if v == top)
        rows.append((b, winners))
    out: list[dict] = []
    for b, winners in rows:
        if out and out[-1]["policies"] == winners:
            out[-1]["f2_to"] = b
        else:
            out.append({"f2_from": b, "f2_to": b, "policies": winners})
    return out


def compare_policies(
    net: NetworkConfig,
    design: RunDesign,
    policies: dict[str, ADPolicy],
    start: Allocation | None = None,
    budget: int = 1000,
    step_init: int = 2,
    max_evals: int | None = None,
    engine: str = "fast",
) -> CompareResult:
    """Solve once per policy under identical seeds and report front dominance."""
    if not policies:
        raise ValueError("no policies given")
    if not any(not p.enabled for p in policies.values()):
        raise ValueError("policies must include the diversion-disabled baseline")
    population = build_population(net, design)  # shared: identical seeds per policy
    fronts: dict[str, SearchResult] = {}
    for pid in policies:
        fronts[pid] = solve(
            net, policies[pid], design, start=start, budget=budget,
            step_init=step_init, max_evals=max_evals, engine=engine,
            population=population,
        )
    dom = dominance_intervals({pid: res.front() for pid, res in fronts.items()})
    return CompareResult(fronts=fronts, dominance=dom)
