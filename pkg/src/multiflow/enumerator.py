"""Outer loop: every known solution serves once as the start of all curves."""
from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .case_model import BusKind, Network
from .curve_design import design_curves
from .errors import ConvergenceError
from .hebc_tracer import HebcConfig, TraceResult, trace_curve, trace_curve_pc
from .quadratic_form import QuadraticSystem, build_system, jacobian, residual

log = logging.getLogger(__name__)

TRACERS = ("hebc", "pc")


@dataclass
class EnumConfig:
    tracer: str = "hebc"
    curve_strategy: str = "identity"
    e_matrix: str | None = None
    seed: int = 0
    jobs: int = 1
    dedup_tol: float = 1e-4
    residual_tol: float = 1e-6
    max_starts: int | None = None
    start_state: np.ndarray | None = None
    hebc: HebcConfig = field(default_factory=HebcConfig)

    def __post_init__(self):
        if self.tracer not in TRACERS:
            raise ValueError(f"unknown tracer {self.tracer!r}")
        if self.jobs < 1:
            raise ValueError("jobs must be at least 1")


@dataclass
class SolutionSet:
    solutions: list = field(default_factory=list)
    provenance: list = field(default_factory=list)   # (start index or None, curve l or None)
    visited: int = 0

    def __len__(self) -> int:
        return len(self.solutions)


@dataclass
class CurveRecord:
    start: int
    curve: int
    status: str
    n_holo: int
    n_pc: int
    n_pc_rejected: int
    new_solutions: int
    switches: int
    misses: int


@dataclass
class RunReport:
    tracer: str
    curves: list = field(default_factory=list)
    holo_steps: int = 0
    pc_steps: int = 0
    holo_time: float = 0.0
    pc_time: float = 0.0
    total_time: float = 0.0

    @property
    def completeness(self) -> str:
        bad = [c for c in self.curves if c.status in ("stuck", "budget_exhausted")]
        return "conditional" if bad else "complete"


def canonical(sys: QuadraticSystem, u) -> np.ndarray:
    """Representative of ``{u, -u}`` with nonnegative slack real part.

    The equations are even in ``U``, so ``-u`` is the same operating point
    rotated by half a turn.
    """
    u = np.asarray(u, dtype=float)
    return -u if u[sys.slack] < 0 else u.copy()


def flat_start(net: Network) -> np.ndarray:
    vd = [b.v_magnitude_setpoint if b.kind is not BusKind.PQ else 1.0 for b in net.buses]
    return np.concatenate([vd, np.zeros(net.n_bus - 1)])


def newton_solve(sys: QuadraticSystem, u0, tol: float = 1e-10, max_iters: int = 30) -> np.ndarray:
    u = np.asarray(u0, dtype=float).copy()
    for _ in range(max_iters):
        f = residual(sys, u)
        err = np.max(np.abs(f))
        if not np.isfinite(err):
            break
        if err < tol:
            return u
        try:
            u -= np.linalg.solve(jacobian(sys, u), f)
        except np.linalg.LinAlgError:
            raise ConvergenceError("singular Jacobian during Newton iterations") from None
    raise ConvergenceError(f"Newton did not converge in {max_iters} iterations")


def initial_solution(net: Network, sys: QuadraticSystem | None = None, u0=None) -> np.ndarray:
    """Newton from the flat start (or ``u0``); raises :class:`ConvergenceError`."""
    sys = sys or build_system(net)
    start = flat_start(net) if u0 is None else u0
    return canonical(sys, newton_solve(sys, start))


def dedup_insert(sset: SolutionSet, sys: QuadraticSystem, u, tol: float = 1e-4,
                 residual_tol: float = 1e-6, provenance=(None, None)) -> bool:
    u = canonical(sys, u)
    err = float(np.max(np.abs(residual(sys, u))))
    if not err < residual_tol:
        log.warning("rejected candidate solution with residual %.3g", err)
        return False
    for s in sset.solutions:
        if np.max(np.abs(s - u)) <= tol:
            return False
    sset.solutions.append(u)
    sset.provenance.append(tuple(provenance))
    return True


def _trace_task(args):
    sys, direction, start, tracer, hcfg, curve_id = args
    fn = trace_curve if tracer == "hebc" else trace_curve_pc
    return fn(sys, direction, start, hcfg, curve_id)


def find_all_solutions(net: Network, cfg: EnumConfig | None = None, sys=None,
                       on_curve=None):
    """Enumerate solutions by tracing every designed curve from every solution.

    Returns ``(SolutionSet, RunReport, traces)`` where ``traces`` maps
    ``(start, l)`` to the :class:`TraceResult`.  ``on_curve(record)`` is
    called after each merged curve.
    """
    cfg = cfg or EnumConfig()
    t_start = time.perf_counter()
    sys = sys or build_system(net)
    directions = design_curves(sys, cfg.curve_strategy, e_file=cfg.e_matrix, seed=cfg.seed)
    sset = SolutionSet()
    x1 = initial_solution(net, sys, cfg.start_state)
    dedup_insert(sset, sys, x1, cfg.dedup_tol, cfg.residual_tol)
    report = RunReport(cfg.tracer)
    traces = {}
    pool = ProcessPoolExecutor(cfg.jobs) if cfg.jobs > 1 else None
    try:
        while sset.visited < len(sset):
            if cfg.max_starts is not None and sset.visited >= cfg.max_starts:
                break
            k = sset.visited
            start = sset.solutions[k]
            tasks = [(sys, d, start, cfg.tracer, cfg.hebc, d.l) for d in directions]
            results = pool.map(_trace_task, tasks) if pool else map(_trace_task, tasks)
            for d, res in zip(directions, results):
                traces[(k, d.l)] = res
                new = sum(dedup_insert(sset, sys, u, cfg.dedup_tol, cfg.residual_tol, (k, d.l))
                          for u in res.solutions)
                _account(report, res)
                rec = CurveRecord(k, d.l, res.status, res.n_holo, res.n_pc, res.n_pc_rejected,
                                  new, len(res.switches), res.misses)
                report.curves.append(rec)
                if res.status in ("stuck", "budget_exhausted"):
                    log.warning("curve %d from start %d ended %s", d.l, k, res.status)
                if on_curve is not None:
                    on_curve(rec)
            sset.visited += 1
    finally:
        if pool is not None:
            pool.shutdown()
    report.total_time = time.perf_counter() - t_start
    return sset, report, traces


def _account(report: RunReport, res: TraceResult) -> None:
    report.holo_steps += res.n_holo
    report.pc_steps += res.n_pc
    report.holo_time += res.holo_time
    report.pc_time += res.pc_time
