"""Result persistence: JSON reports, front/series CSVs, figures, run manifests.

Machine-readable CSVs carry full-precision floats so a written front re-reads
to exactly the in-memory values; the human-facing JSON report rounds stochastic
means to 2 decimals. All files are written atomically (temp + rename). The
manifest timestamp honors SOURCE_DATE_EPOCH so identically seeded reruns can be
byte-identical.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
import time
from pathlib import Path

import numpy as np
from scipy import stats as sstats

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .engine import ReplicationStats
from .model import ADPolicy, Allocation, NetworkConfig, RunDesign, config_hash
from .optimize import CompareResult, Evaluation, SearchResult


def atomic_write_bytes(path: str | Path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: str | Path, text: str) -> None:
    atomic_write_bytes(path, text.encode())


def write_json(path: str | Path, obj) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def ci_halfwidth(values: np.ndarray, level: float = 0.95) -> float:
    """t-based confidence half-width of a replication mean; 0 for a single rep."""
    n = values.size
    if n < 2:
        return 0.0
    sd = float(values.std(ddof=1))
    if sd == 0.0:
        return 0.0
    return float(sstats.t.ppf(0.5 + level / 2.0, n - 1) * sd / np.sqrt(n))


# ---------------------------------------------------------------------------
# fronts


def front_header(net: NetworkConfig) -> list[str]:
    return net.slot_names() + ["f1_minutes", "f2_minutes", "viol_norm", "feasible"]


def write_front_csv(path: str | Path, net: NetworkConfig, front: list[Evaluation]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(front_header(net))
    for e in front:
        w.writerow(
            list(e.alloc)
            + [repr(float(e.f1)), int(round(e.f2)), repr(float(e.viol_norm)),
               "true" if e.feasible else "false"]
        )
    atomic_write_text(path, buf.getvalue())


def read_front_csv(path: str | Path) -> list[Evaluation]:
    out: list[Evaluation] = []
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    n_slots = len(header) - 4
    for row in rows[1:]:
        out.append(
            Evaluation(
                alloc=tuple(int(v) for v in row[:n_slots]),
                f1=float(row[n_slots]),
                f2=float(row[n_slots + 1]),
                viol_norm=float(row[n_slots + 2]),
            )
        )
    return out


def write_series_csv(path: str | Path, front: list[Evaluation]) -> None:
    """(f2, f1) pairs of the feasible front, ready for external plotting."""
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["f2_minutes", "f1_minutes"])
    for e in front:
        if e.feasible:
            w.writerow([int(round(e.f2)), repr(float(e.f1))])
    atomic_write_text(path, buf.getvalue())


def render_fronts_png(path: str | Path, series: dict[str, list[Evaluation]]) -> None:
    """Pareto fronts in the objective plane: cost (f2) on x, NVA time (f1) on y."""
    fig, ax = plt.subplots(figsize=(7.2, 4.8))
    markers = ["o", "D", "s", "^", "v", "P", "X", "*", "<", ">"]
    for i, (label, front) in enumerate(series.items()):
        pts = [(e.f2, e.f1) for e in front if e.feasible]
        if not pts:
            continue
        xs, ys = zip(*sorted(pts))
        ax.plot(xs, ys, marker=markers[i % len(markers)], ms=4.5, lw=1.0, label=label)
    ax.set_xlabel("f2: resource-minutes per day cycle [min]")
    ax.set_ylabel("f1: weighted mean non-value-added time [min]")
    ax.grid(True, alpha=0.3)
    if series:
        ax.legend(fontsize=8)
    fig.tight_layout()
    buf = io.BytesIO()
    fig.savefig(buf, format="png", dpi=120, metadata={"Software": "ednetsim"})
    plt.close(fig)
    atomic_write_bytes(path, buf.getvalue())


# ---------------------------------------------------------------------------
# simulate report


def simulate_report(
    net: NetworkConfig,
    policy_id: str,
    alloc: Allocation,
    design: RunDesign,
    stats: list[ReplicationStats],
    evaluation: Evaluation,
) -> dict:
    labels = net.tag_labels
    counts = np.stack([st.count for st in stats])  # [rep, slot, tag]
    mean_nva = np.stack(
        [np.where(st.count > 0, st.sum_nva / np.maximum(st.count, 1), 0.0) for st in stats]
    )
    mean_dtdt = np.stack(
        [np.where(st.count > 0, st.sum_dtdt / np.maximum(st.count, 1), 0.0) for st in stats]
    )
    max_nva = np.stack([st.max_nva for st in stats])

    cells = []
    g = 0
    for ed in net.eds:
        for slot in ed.slots:
            for k, lab in enumerate(labels):
                nva = mean_nva[:, g, k]
                dtdt = mean_dtdt[:, g, k]
                cells.append(
                    {
                        "ed": ed.id,
                        "slot": slot.name,
                        "tag": lab,
                        "mean_patients": round(float(counts[:, g, k].mean()), 2),
                        "nva_mean": round(float(nva.mean()), 2),
                        "nva_ci95": round(ci_halfwidth(nva), 2),
                        "dtdt_mean": round(float(dtdt.mean()), 2),
                        "dtdt_ci95": round(ci_halfwidth(dtdt), 2),
                        "nva_max": round(float(max_nva[:, g, k].max()), 2),
                        "threshold": net.thresholds[lab],
                        "violation": round(float(evaluation.violations[g, k]), 2),
                    }
                )
            g += 1

    diversion = []
    for i, ed in enumerate(net.eds):
        diversion.append(
            {
                "ed": ed.id,
                "episodes_mean": round(float(np.mean([st.episodes[i] for st in stats])), 2),
                "diverted_patients_mean": round(
                    float(np.mean([st.diverted[i] for st in stats])), 2
                ),
                "diversion_hours_mean": round(
                    float(np.mean([st.diversion_minutes[i] for st in stats]) / 60.0), 2
                ),
            }
        )

    return {
        "policy": policy_id,
        "allocation": list(alloc.values),
        "replications": design.replications,
        "horizon_days": design.horizon_days,
        "warmup_hours": design.warmup_hours,
        "seed": design.base_seed,
        "f1_minutes": round(float(evaluation.f1), 2),
        "f2_minutes": int(round(evaluation.f2)),
        "viol_norm": round(float(evaluation.viol_norm), 2),
        "feasible": evaluation.feasible,
        "conservation_ok": all(st.conservation_ok() for st in stats),
        "cells": cells,
        "diversion": diversion,
    }


def write_trace_csv(path: str | Path, net: NetworkConfig, trace) -> None:
    labels = net.tag_labels
    ids = [ed.id for ed in net.eds]
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["time", "event_type", "ed", "patient_id", "tag"])
    for ev in trace:
        w.writerow(
            [
                repr(float(ev.time)),
                ev.event,
                ids[ev.ed] if ev.ed >= 0 else "",
                ev.patient if ev.patient >= 0 else "",
                labels[ev.tag] if ev.tag >= 0 else "",
            ]
        )
    atomic_write_text(path, buf.getvalue())


# ---------------------------------------------------------------------------
# manifest


def build_manifest(
    subcommand: str,
    config_path: str | Path,
    artifacts: list[str],
    *,
    policies: list[str] | None = None,
    seed: int | None = None,
    replications: int | None = None,
    budget: int | None = None,
) -> dict:
    created = int(os.environ.get("SOURCE_DATE_EPOCH", int(time.time())))
    man = {
        "tool": "ednetsim",
        "subcommand": subcommand,
        "config_path": str(config_path),
        "config_sha256": config_hash(config_path),
        "artifacts": sorted(artifacts),
        "created_unix": created,
    }
    if policies is not None:
        man["policies"] = list(policies)
    if seed is not None:
        man["seed"] = seed
    if replications is not None:
        man["replications"] = replications
    if budget is not None:
        man["budget"] = budget
    return man


def compare_report(result: CompareResult) -> dict:
    fronts = {}
    for pid, res in result.fronts.items():
        fronts[pid] = [
            {
                "allocation": list(e.alloc),
                "f1_minutes": float(e.f1),
                "f2_minutes": int(round(e.f2)),
                "viol_norm": float(e.viol_norm),
                "feasible": e.feasible,
            }
            for e in res.front()
        ]
    return {"fronts": fronts, "dominance_intervals": result.dominance}
