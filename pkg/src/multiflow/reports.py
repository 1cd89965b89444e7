"""JSON and CSV documents emitted by the command line tool.

Every JSON document has a schema under ``schemas/``; :func:`dumps` gives a
canonical encoding (sorted keys, fixed indentation) so identical runs
produce identical bytes.
"""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .quadratic_form import QuadraticSystem, residual

SCHEMA_DIR = Path(__file__).parent / "schemas"
SCHEMAS = ("solutions", "run_report", "trace_report", "compare_report", "cost_model")


def load_schema(name: str) -> dict:
    return json.loads((SCHEMA_DIR / f"{name}.schema.json").read_text())


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def solution_entry(sys: QuadraticSystem, index: int, u, provenance=(None, None)) -> dict:
    v = sys.to_complex(u)
    start, curve = provenance
    return {
        "index": index,
        "voltages": [{"bus": b.id, "re": float(x.real), "im": float(x.imag)}
                     for b, x in zip(sys.network.buses, v)],
        "residual_max": float(np.max(np.abs(residual(sys, u)))),
        "start": start,
        "curve": curve,
    }


def solutions_doc(sys: QuadraticSystem, solutions, provenance=None, tracer=None,
                  strategy=None, seed=None) -> dict:
    provenance = provenance or [(None, None)] * len(solutions)
    return {
        "case": sys.network.name,
        "n_bus": sys.n_bus,
        "tracer": tracer,
        "curve_strategy": strategy,
        "seed": seed,
        "count": len(solutions),
        "solutions": [solution_entry(sys, i, u, p)
                      for i, (u, p) in enumerate(zip(solutions, provenance))],
    }


def run_report_doc(case: str, report) -> dict:
    return {
        "case": case,
        "tracer": report.tracer,
        "completeness": report.completeness,
        "holo_steps": report.holo_steps,
        "pc_steps": report.pc_steps,
        "timing": {"holo": report.holo_time, "pc": report.pc_time, "total": report.total_time},
        "curves": [{"start": c.start, "curve": c.curve, "status": c.status,
                    "holo_steps": c.n_holo, "pc_steps": c.n_pc,
                    "pc_rejected": c.n_pc_rejected, "new_solutions": c.new_solutions,
                    "switches": c.switches, "misses": c.misses} for c in report.curves],
    }


def _plain(x):
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.integer, int)) and not isinstance(x, bool):
        return int(x)
    return x


def trace_report_doc(sys: QuadraticSystem, curve: int, tracer: str, result) -> dict:
    return {
        "case": sys.network.name,
        "curve": curve,
        "tracer": tracer,
        "status": result.status,
        "holo_steps": result.n_holo,
        "pc_steps": result.n_pc,
        "misses": result.misses,
        "solutions": [solution_entry(sys, i, u) for i, u in enumerate(result.solutions)],
        "switches": [{k: _plain(v) for k, v in ev.items()} for ev in result.switches],
    }


def summary_csv(rows) -> str:
    """Rows of ``(case, tracer, report, n_solutions)`` as a Table-style CSV."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["case", "tracer", "holo_steps", "holo_time_s", "pc_steps", "pc_time_s",
                "overall_time_s", "solutions"])
    for case, tracer, rep, n in rows:
        w.writerow([case, tracer, rep.holo_steps, f"{rep.holo_time:.3f}", rep.pc_steps,
                    f"{rep.pc_time:.3f}", f"{rep.total_time:.3f}", n])
    return buf.getvalue()


def symmetric_difference(a, b, tol: float = 1e-4):
    only_a = [u for u in a if not any(np.max(np.abs(u - v)) <= tol for v in b)]
    only_b = [v for v in b if not any(np.max(np.abs(u - v)) <= tol for u in a)]
    return only_a, only_b
