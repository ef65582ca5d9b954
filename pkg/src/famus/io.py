"""Result emission: per-slot CSV streams, JSON summaries, sweep tables.

Stream schema (``famus-stream v1``), one row per (slot, server) plus one
``server = -1`` system row per slot:

    slot, server, queue, reputation, sigma, delegated, accuracy_loss,
    participants, offered, rewards, cost, expected_cost

System rows carry the column sums for delegated/participants/offered/
rewards/cost/expected_cost, the mean accuracy loss over delegated servers,
and leave the per-server columns empty.  Floats use ``repr`` so the text is
a deterministic function of the values.
"""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .engine import RunResult, SweepRow, Trace

STREAM_SCHEMA = "famus-stream v1"
SUMMARY_SCHEMA = "famus-summary v1"
SWEEP_SCHEMA = "famus-sweep v1"

STREAM_COLUMNS = ("slot", "server", "queue", "reputation", "sigma", "delegated", "accuracy_loss",
                  "participants", "offered", "rewards", "cost", "expected_cost")
SWEEP_COLUMNS = ("axis", "value", "policy", "seeds", "cost_mean", "cost_se", "al_mean", "al_se",
                 "jfi_mean", "jfi_se")


class OutputExistsError(FileExistsError):
    pass


def _f(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    return repr(x)


def stream_rows(trace: Trace) -> Iterable[list[str]]:
    task_al = trace.task_accuracy_loss
    cost, exp_cost = trace.cost, trace.expected_cost
    for i in range(len(trace)):
        t = str(int(trace.slots[i]))
        for n in range(trace.queue.shape[1]):
            yield [t, str(n), _f(trace.queue[i, n]), _f(trace.reputation[i, n]), _f(trace.sigma[i, n]),
                   str(int(trace.delegated[i, n])), _f(trace.accuracy_loss[i, n]),
                   str(int(trace.participants[i, n])), str(int(trace.offered[i, n])),
                   _f(trace.rewards[i, n]), _f(trace.cluster_cost[i, n]),
                   _f(trace.expected_cluster_cost[i, n])]
        yield [t, "-1", "", "", "", str(int(trace.delegated[i].sum())), _f(task_al[i]),
               str(int(trace.participants[i].sum())), str(int(trace.offered[i].sum())),
               _f(trace.rewards[i].sum()), _f(cost[i]), _f(exp_cost[i])]


def stream_text(trace: Trace) -> str:
    buf = io.StringIO()
    buf.write(f"# {STREAM_SCHEMA}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(STREAM_COLUMNS)
    w.writerows(stream_rows(trace))
    return buf.getvalue()


def _clean(obj):
    """JSON-safe copy: NaN/inf become null, numpy scalars become floats."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def summary_json(result: RunResult) -> str:
    body = {"schema": SUMMARY_SCHEMA, **_clean(result.summary.to_dict())}
    return json.dumps(body, indent=2, sort_keys=True) + "\n"


def sweep_text(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    buf.write(f"# {SWEEP_SCHEMA}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in rows:
        w.writerow([r.axis, _f(r.value), r.policy, r.seeds, _f(r.cost_mean), _f(r.cost_se), _f(r.al_mean),
                    _f(r.al_se), _f(r.jfi_mean), _f(r.jfi_se)])
    return buf.getvalue()


def _write_all(out_dir: Path, files: dict[str, str], force: bool) -> list[Path]:
    out_dir = Path(out_dir)
    targets = {out_dir / name: text for name, text in files.items()}
    existing = [p for p in targets if p.exists()]
    if existing and not force:
        raise OutputExistsError(f"refusing to overwrite {', '.join(map(str, existing))} (use --force)")
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for path, text in targets.items():
            path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write to {out_dir}: {exc}") from exc
    return list(targets)


def run_stem(result: RunResult) -> str:
    s = result.summary
    return f"{s.policy}_seed{s.seed}"


def emit_run(result: RunResult, out_dir, force: bool = False) -> list[Path]:
    """One stream CSV and one summary JSON per run."""
    stem = run_stem(result)
    return _write_all(Path(out_dir), {f"{stem}.csv": stream_text(result.trace),
                                      f"{stem}.json": summary_json(result)}, force)


def emit_sweep(rows: Sequence[SweepRow], out_dir, force: bool = False) -> list[Path]:
    """One plot-ready CSV per (axis, policy) table."""
    if not rows:
        raise ValueError("nothing to emit")
    name = f"sweep_{rows[0].axis}_{rows[0].policy}.csv"
    detail = {"schema": SWEEP_SCHEMA, "rows": _clean([r.__dict__ for r in rows])}
    return _write_all(Path(out_dir), {name: sweep_text(rows),
                                      name.replace(".csv", ".json"): json.dumps(detail, indent=2) + "\n"},
                      force)
