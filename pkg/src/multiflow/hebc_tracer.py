"""Hybrid curve tracer: holomorphic macro-steps on regular stretches, predictor-corrector across folds.

Two alpha scales are in play.  Curve points carry the global ``alpha`` of
``PF(U) = alpha d``; solutions sit where it crosses zero.  Each embedding
uses a local parameter ``t = alpha - alpha*`` centred at the current point,
and Pade poles and step sizes are measured in ``t``.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .curve_design import CurveDirection
from .errors import CorrectorFailure, NumericalError, PoleEvaluationError
from .hem_core import embed_at_point, series_coefficients
from .pade import PadeApproximant, min_pole, pade_from_series
from .pc_engine import (CurvePoint, PcConfig, locate_crossing, newton_correct, secant_slope,
                        tangent, traverse_singularity, warm_start)
from .quadratic_form import QuadraticSystem, residual

log = logging.getLogger(__name__)

ACCEPTED = "accepted"
CORRECTOR_FAILED = "corrector_failed"
PROGRESS_TOO_SMALL = "progress_too_small"
PING_PONG_STEPS = 10     # minimum traversal length when the turn is carried over
PC_RETRIES = 3           # reference-tracer retraces with halved step bound after a cycle


@dataclass
class HebcConfig:
    i_max: int = 15
    dp_max: float = 1e-3
    d_alpha_min: float = 1e-6
    max_macro_steps: int = 10000
    max_holo_steps: int = 500
    delta_max: float = 1e4          # growth cap of the local step
    solution_tol: float = 1e-6
    polish_tol: float = 1e-10
    closure_tol: float = 1e-4
    dedup_tol: float = 1e-4
    u_escape: float = 10.0          # curves leaving this box are treated as open
    pc_patience: int = 500          # PC steps per traversal before handing back
    max_pc_steps: int = 200000      # budget of the full-PC reference tracer
    pc: PcConfig = field(default_factory=PcConfig)

    def __post_init__(self):
        if self.i_max < 4:
            raise ValueError("i_max must be at least 4")
        for name in ("dp_max", "d_alpha_min", "delta_max", "solution_tol", "closure_tol",
                     "dedup_tol", "u_escape"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if min(self.max_macro_steps, self.max_holo_steps, self.pc_patience,
               self.max_pc_steps) < 1:
            raise ValueError("budgets must be positive")


@dataclass
class TraceResult:
    solutions: list = field(default_factory=list)
    step_log: list = field(default_factory=list)
    status: str = "running"        # closed | open | budget_exhausted | stuck
    exits: tuple = ()              # raw per-direction outcomes, e.g. ("escaped", "cycled")
    n_holo: int = 0
    n_pc: int = 0
    n_pc_rejected: int = 0
    switches: list = field(default_factory=list)
    misses: int = 0
    holo_time: float = 0.0
    pc_time: float = 0.0

    @property
    def counts(self) -> tuple[int, int]:
        return self.n_holo, self.n_pc


class SeriesEvaluator:
    """Pade approximants of every state variable around one curve point."""

    def __init__(self, pades: list[PadeApproximant]):
        self.pades = pades
        dn = max(len(p.numerator) for p in pades)
        dd = max(len(p.denominator) for p in pades)
        self._num = np.zeros((dn, len(pades)))
        self._den = np.zeros((dd, len(pades)))
        for j, p in enumerate(pades):
            self._num[:len(p.numerator), j] = p.numerator
            self._den[:len(p.denominator), j] = p.denominator

    def __call__(self, t: float) -> np.ndarray:
        num = np.zeros(self._num.shape[1])
        den = np.zeros(self._den.shape[1])
        for c in self._num[::-1]:
            num = num * t + c
        for c in self._den[::-1]:
            den = den * t + c
        if np.any(np.abs(den) < 1e-14):
            raise PoleEvaluationError(f"evaluation at a pole (t = {t})")
        return num / den

    def many(self, ts) -> np.ndarray:
        """States at several parameters at once, one row per entry of ``ts``."""
        ts = np.asarray(ts, dtype=float)
        num = np.vander(ts, self._num.shape[0], increasing=True) @ self._num
        den = np.vander(ts, self._den.shape[0], increasing=True) @ self._den
        if np.any(np.abs(den) < 1e-14):
            raise PoleEvaluationError("evaluation at a pole")
        return num / den


@dataclass
class HoloStep:
    outcome: str
    next: CurvePoint | None = None
    evaluator: SeriesEvaluator | None = None
    p_min: float | None = None
    delta: float = 0.0
    iterations: int = 0
    reason: str = ""


def _mismatch(sys, direction, u, alpha) -> float:
    return float(np.max(np.abs(residual(sys, u) - alpha * direction.d)))


def _max_mismatch(sys, direction, states, alphas) -> float:
    """Largest curve-equation mismatch over a batch of ``(state, alpha)`` rows."""
    n = sys.n
    mu = (sys._stack @ states.T).reshape(n, n, len(states))
    f = np.einsum("ijm,jm->mi", mu, states.T) - sys.r - np.outer(alphas, direction.d)
    return float(np.max(np.abs(f)))


# fractions of a trial step where the mismatch is checked; a Pade
# continuation past a fold can come back near the curve at the endpoint
_CHECK = np.linspace(0.0, 1.0, 17)[1:]


def build_evaluator(sys, direction, point: CurvePoint, i_max: int) -> SeriesEvaluator:
    coeffs = embed_at_point(sys, direction, point.u, point.alpha)
    series = series_coefficients(sys, coeffs, i_max)
    return SeriesEvaluator([pade_from_series(series.u[:, j]) for j in range(sys.n)])


def choose_delta(ok, p_min, cfg: HebcConfig) -> float | None:
    """Largest admissible local step, to within 10%, or None below ``d_alpha_min``.

    ``ok(delta)`` tests the mismatch bound; the pole bound is applied here.
    Doubling/halving brackets the limit, bisection refines it.
    """
    bound = abs(p_min) if p_min is not None else math.inf

    def admissible(d):
        return d < bound and ok(d)

    d = min(0.1, 0.5 * bound, cfg.delta_max)
    if admissible(d):
        lo, hi = d, None
        while lo * 2 <= cfg.delta_max:
            if admissible(lo * 2):
                lo *= 2
            else:
                hi = lo * 2
                break
        if hi is None:
            return lo if lo >= cfg.d_alpha_min else None
    else:
        hi, lo = d, None
        while lo is None:
            d = hi / 2
            if d < cfg.d_alpha_min:
                return None
            if admissible(d):
                lo = d
            else:
                hi = d
    while hi - lo > 0.1 * lo:
        mid = 0.5 * (lo + hi)
        if admissible(mid):
            lo = mid
        else:
            hi = mid
    return lo if lo >= cfg.d_alpha_min else None


def holo_step(sys: QuadraticSystem, direction: CurveDirection, current: CurvePoint,
              travel_sign: int, cfg: HebcConfig) -> HoloStep:
    """One holomorphic macro-step from ``current`` in the alpha direction ``travel_sign``."""
    try:
        ev = build_evaluator(sys, direction, current, cfg.i_max)
    except NumericalError as exc:
        return HoloStep(CORRECTOR_FAILED, reason=str(exc))
    p_min = min_pole(ev.pades, travel_sign)

    def ok(d):
        ts = travel_sign * d * _CHECK
        try:
            states = ev.many(ts)
        except PoleEvaluationError:
            return False
        return _max_mismatch(sys, direction, states, current.alpha + ts) < cfg.dp_max

    delta = choose_delta(ok, p_min, cfg)
    if delta is None or delta < cfg.d_alpha_min:
        return HoloStep(PROGRESS_TOO_SMALL, evaluator=ev, p_min=p_min,
                        reason="local step below minimum")
    t = travel_sign * delta
    u_pred = ev(t)
    try:
        res = newton_correct(sys, direction, u_pred, current.alpha + t,
                             tol=cfg.pc.newton_tol, max_iters=cfg.pc.newton_max_iters)
    except CorrectorFailure as exc:
        return HoloStep(CORRECTOR_FAILED, evaluator=ev, p_min=p_min, delta=delta,
                        reason=str(exc))
    pt = res.point
    move = np.max(np.abs(u_pred - current.u))
    if np.max(np.abs(pt.u - u_pred)) > 0.25 * move + 1e-6:
        return HoloStep(CORRECTOR_FAILED, evaluator=ev, p_min=p_min, delta=delta,
                        reason="corrector left the branch")
    pt.arc_param = current.arc_param + float(np.linalg.norm(pt.z - current.z))
    return HoloStep(ACCEPTED, pt, ev, p_min, delta, res.iterations)


def solve_at_zero(sys, direction, u_guess, cfg: HebcConfig):
    """Newton at alpha = 0 from ``u_guess``; the root or None."""
    try:
        res = newton_correct(sys, direction, u_guess, 0.0, tol=cfg.polish_tol, max_iters=30)
    except CorrectorFailure:
        return None
    u = res.point.u
    if np.max(np.abs(residual(sys, u))) >= cfg.solution_tol:
        return None
    return u


def detect_solution(prev: CurvePoint, nxt: CurvePoint, sys, direction, cfg: HebcConfig,
                    guess=None):
    """Solution between two curve points whose alpha changes sign.

    Returns ``(crossed, u)``: ``u`` is None on a miss.  Without ``guess``
    the crossing is first located on the curve between the two points;
    with it (a Pade value at alpha = 0) Newton starts from ``guess`` and
    must stay close to it.
    """
    if not prev.alpha * nxt.alpha < 0:
        return False, None
    if guess is None:
        try:
            guess = locate_crossing(sys, direction, prev, nxt, cfg.pc).u
        except CorrectorFailure:
            return True, None
        return True, solve_at_zero(sys, direction, guess, cfg)
    u = solve_at_zero(sys, direction, guess, cfg)
    if u is None:
        return True, None
    scale = max(np.max(np.abs(nxt.u - prev.u)), 1e-3)
    if np.max(np.abs(u - guess)) > 0.1 * scale:
        return True, None
    return True, u


def check_closure(points, start: CurvePoint, arc_length: float, cfg: HebcConfig) -> bool:
    if len(points) < 3 or arc_length <= 10 * cfg.closure_tol:
        return False
    return bool(np.max(np.abs(points[-1].z - start.z)) < cfg.closure_tol)


class _Trace:
    """Mutable bookkeeping shared by both tracers for one curve."""

    def __init__(self, sys, direction, start_u, cfg: HebcConfig, curve_id):
        self.sys = sys
        self.direction = direction
        self.cfg = cfg
        self.curve_id = curve_id if curve_id is not None else direction.l
        self.start = CurvePoint(np.asarray(start_u, dtype=float).copy(), 0.0, 0.0)
        self.result = TraceResult()
        self.result.solutions.append(self.start.u.copy())
        self.recent = []
        self.crossed = set()
        self.marks = []

    def seen(self, u) -> bool:
        """True when ``u`` is a solution this trace already crossed."""
        return any(np.max(np.abs(u - self.result.solutions[k])) < self.cfg.dedup_tol
                   for k in self.crossed)

    def add_solution(self, u) -> str | None:
        """Record a crossing of alpha = 0 at solution ``u``.

        Returns ``"closed"`` at the start and ``"cycled"`` when ``u`` was
        already crossed: a regular solution lies on the curve once, so a
        repeat means the tracer jumped onto a loop that misses the start.
        """
        if np.max(np.abs(u - self.start.u)) < self.cfg.dedup_tol:
            return "closed"
        for k, s in enumerate(self.result.solutions):
            if np.max(np.abs(u - s)) < self.cfg.dedup_tol:
                if k in self.crossed:
                    return "cycled"
                self.crossed.add(k)
                return None
        self.crossed.add(len(self.result.solutions))
        self.result.solutions.append(u.copy())
        return None

    def revisited(self, pt) -> bool:
        """True when ``pt`` repeats an earlier switch point far back along the curve.

        Catches loops that never cross alpha = 0 after a branch jump.
        """
        for z, arc in self.marks:
            gap = np.linalg.norm(pt.z - z) / max(1.0, np.linalg.norm(z))
            if gap < 1e-3 and pt.arc_param - arc > 1.0:
                return True
        self.marks.append((pt.z, pt.arc_param))
        return False

    def retreat_point(self, current, back: float = 0.05):
        """Logged point about ``back`` arc length behind ``current`` and the one after it.

        None when alpha changes sign on the way (retracing would cross a
        recorded solution twice) or the log is too short.
        """
        rows = self.result.step_log
        sign = np.sign(current.alpha)
        for k in range(len(rows) - 1, 0, -1):
            _, _, arc, alpha, _, _, _, u = rows[k]
            if np.sign(alpha) != sign:
                return None
            if arc <= current.arc_param - back:
                nxt = rows[k + 1] if k + 1 < len(rows) else rows[-1]
                return (CurvePoint(u, alpha, arc), CurvePoint(nxt[7], nxt[3], nxt[2]))
        return None

    def escaped(self, pt) -> bool:
        return bool(np.max(np.abs(pt.u)) > self.cfg.u_escape)

    def closed_by_return(self, pt) -> bool:
        self.recent.append(pt)
        if len(self.recent) > 3:
            self.recent.pop(0)
        return check_closure(self.recent, self.start, pt.arc_param, self.cfg)

    def log(self, routine, pt, iters, h, r_m):
        self.result.step_log.append((self.curve_id, routine, pt.arc_param, pt.alpha,
                                     iters, h, r_m, pt.u))

    def pc_callback(self, mode):
        """``on_point`` hook: log, detect crossings, closure and escape.

        ``mode`` is a dict; its ``stop`` key names why the traversal was
        stopped.  With ``mode["crossing"]`` set the traversal stops right
        after the next crossing of alpha = 0.
        """
        def hook(prev, pt):
            self.result.n_pc += 1
            self.log("pc", pt, None, None, secant_slope(prev, pt))
            crossed, u = detect_solution(prev, pt, self.sys, self.direction, self.cfg)
            if crossed:
                if u is None:
                    self.result.misses += 1
                    log.debug("curve %s: solution miss inside predictor-corrector",
                              self.curve_id)
                else:
                    stop = self.add_solution(u)
                    if stop:
                        mode["stop"] = stop
                        return True
                if mode.get("crossing"):
                    mode["stop"] = "crossed"
                    return True
            if self.closed_by_return(pt):
                mode["stop"] = "closed"
                return True
            if self.escaped(pt):
                mode["stop"] = "escaped"
                return True
            return False
        return hook

    def fix_pc_log(self, trav, first_row):
        # fill iterations and step sizes now that the traversal reports them
        rows = self.result.step_log
        for k, (iters, h) in enumerate(trav.steps):
            cid, routine, s, a, _, _, r_m, u = rows[first_row + k]
            rows[first_row + k] = (cid, routine, s, a, iters, h, r_m, u)
        self.result.n_pc_rejected += trav.rejected


def _initial_tangent(sys, direction, point, travel_sign):
    ref = np.zeros(sys.n + 1)
    ref[-1] = travel_sign
    t = tangent(sys, direction, point.u, point.alpha, ref)
    return t


def _orient(sys, direction, point, prev, travel_sign):
    ref = point.z - prev.z if prev is not None else None
    if ref is None or not np.any(ref):
        return _initial_tangent(sys, direction, point, travel_sign)
    return tangent(sys, direction, point.u, point.alpha, ref)


def _run_pc(tr: _Trace, seeds, h0, tvec, direction_changed, crossing=False,
            max_steps=None, exit_on_turn=True, min_steps=1):
    cfg = tr.cfg
    mode = {"crossing": crossing}
    first = len(tr.result.step_log)
    t0 = time.perf_counter()
    trav = traverse_singularity(tr.sys, tr.direction, seeds, cfg.pc, h0=h0, tangent_vec=tvec,
                                on_point=tr.pc_callback(mode),
                                max_steps=max_steps or cfg.pc_patience,
                                exit_on_turn=exit_on_turn and not crossing,
                                direction_changed=direction_changed, min_steps=min_steps)
    tr.result.pc_time += time.perf_counter() - t0
    tr.fix_pc_log(trav, first)
    return trav, mode.get("stop")


def _trace_hebc_direction(tr: _Trace, travel_sign: int, budget: list) -> str:
    """Trace from the start in one alpha direction; returns a terminal status."""
    sys, direction, cfg = tr.sys, tr.direction, tr.cfg
    res = tr.result
    current, prev = tr.start, None
    last_dh = None
    carry_turn = False
    retreated = False
    last_h = cfg.pc.h_init
    while budget[0] < cfg.max_macro_steps:
        budget[0] += 1
        step = None
        for _ in range(cfg.max_holo_steps):
            t0 = time.perf_counter()
            step = holo_step(sys, direction, current, travel_sign, cfg)
            res.holo_time += time.perf_counter() - t0
            res.n_holo += 1
            if step.outcome != ACCEPTED:
                break
            nxt = step.next
            tr.log("holo", nxt, step.iterations, step.delta, secant_slope(current, nxt))
            guess = None
            if current.alpha * nxt.alpha < 0:
                try:
                    guess = step.evaluator(-current.alpha)
                except PoleEvaluationError:
                    guess = None
            crossed, u = detect_solution(current, nxt, sys, direction, cfg, guess)
            if crossed and u is not None and tr.seen(u):
                # near a fold the guess can slide onto the neighbouring solution
                u = None
            if crossed and u is None:
                res.misses += 1
                res.switches.append({"kind": "enter_pc", "reason": "solution_miss",
                                     "alpha": current.alpha, "warm": False})
                tvec = _orient(sys, direction, current, prev, travel_sign)
                trav, stop = _run_pc(tr, [current], cfg.pc.h_init, tvec, False, crossing=True)
                if stop in ("closed", "escaped", "cycled"):
                    return stop
                if trav.status == "stuck":
                    return "stuck"
                prev, current = _last_two(trav, current)
                travel_sign = _alpha_sign(prev, current, travel_sign)
                carry_turn = trav.direction_changed
                step = None
                break
            if crossed:
                stop = tr.add_solution(u)
                if stop:
                    return stop
            carry_turn = False
            last_dh = step.delta
            prev, current = current, nxt
            if tr.closed_by_return(current):
                return "closed"
            if tr.escaped(current):
                return "escaped"
        if step is None or step.outcome == ACCEPTED:
            continue
        # switch into predictor-corrector
        if tr.revisited(current):
            return "cycled"
        ws = None
        if step.evaluator is not None and step.p_min is not None and last_dh is not None:
            ws = warm_start(sys, direction, current, step.evaluator, step.p_min, last_dh,
                            travel_sign, cfg.pc)
        event = {"kind": "enter_pc", "reason": step.outcome, "alpha": current.alpha,
                 "warm": bool(ws and ws.warm)}
        if ws is not None and ws.warm:
            event.update(s_pc=ws.s_pc, d_hp=ws.d_hp, last_dh=last_dh)
            seeds, h0, tvec = ws.back_points + [current], ws.s_pc, None
        else:
            seeds, h0 = [current], cfg.pc.h_init
            tvec = _orient(sys, direction, current, prev, travel_sign)
        res.switches.append(event)
        min_steps = 1
        if carry_turn:
            # the holomorphic routine failed right after a traversal: keep the
            # step size and move a little further before handing back
            h0 = max(h0, last_h)
            min_steps = PING_PONG_STEPS
        trav, stop = _run_pc(tr, seeds, h0, tvec, carry_turn, min_steps=min_steps)
        res.switches.append({"kind": "exit_pc", "reason": stop or trav.status,
                             "alpha": trav.exit_point.alpha, "steps": len(trav.points)})
        if stop in ("closed", "escaped", "cycled"):
            return stop
        if trav.status == "stuck" or not trav.points:
            back = None if retreated else tr.retreat_point(current)
            if back is None:
                return "stuck"
            # a holomorphic step can land right at a near-crossing of two
            # branches; approach it again from an earlier point
            retreated = True
            anchor, ahead = back
            res.switches.append({"kind": "enter_pc", "reason": "retreat",
                                 "alpha": anchor.alpha, "warm": False})
            tvec = tangent(sys, direction, anchor.u, anchor.alpha, ahead.z - anchor.z)
            trav, stop = _run_pc(tr, [anchor], cfg.pc.h_init, tvec, False)
            res.switches.append({"kind": "exit_pc", "reason": stop or trav.status,
                                 "alpha": trav.exit_point.alpha, "steps": len(trav.points)})
            if stop in ("closed", "escaped", "cycled"):
                return stop
            if trav.status == "stuck" or not trav.points:
                return "stuck"
        else:
            retreated = False
        prev, current = _last_two(trav, current)
        travel_sign = _alpha_sign(prev, current, travel_sign)
        carry_turn = trav.direction_changed
        last_h = trav.h
        last_dh = None
    return "budget_exhausted"


def _last_two(trav, fallback):
    pts = trav.points
    if len(pts) >= 2:
        return pts[-2], pts[-1]
    if pts:
        return fallback, pts[-1]
    return None, fallback


def _same_sign(points) -> bool:
    signs = {np.sign(p.alpha) for p in points}
    return len(signs - {0.0}) <= 1


def _alpha_sign(prev, cur, default):
    if prev is None:
        return default
    da = cur.alpha - prev.alpha
    return default if da == 0 else (1 if da > 0 else -1)


def _finish(tr: _Trace, statuses) -> TraceResult:
    res = tr.result
    res.exits = tuple(statuses)
    if "closed" in statuses:
        res.status = "closed"
    elif "stuck" in statuses or "cycled" in statuses:
        res.status = "stuck"
    elif "budget_exhausted" in statuses:
        res.status = "budget_exhausted"
    else:
        res.status = "open"
    return res


def trace_curve(sys: QuadraticSystem, direction: CurveDirection, start, cfg: HebcConfig | None = None,
                curve_id=None) -> TraceResult:
    """Trace one curve from the solution ``start`` with the hybrid method.

    The curve is followed with alpha increasing first.  A closed curve ends
    when it returns to the start; a curve that leaves the ``u_escape`` box
    is traced again from the start in the other direction.
    """
    cfg = cfg or HebcConfig()
    tr = _Trace(sys, direction, start, cfg, curve_id)
    budget = [0]
    statuses = [_trace_hebc_direction(tr, +1, budget)]
    if statuses[0] == "escaped":
        tr.recent.clear()
        statuses.append(_trace_hebc_direction(tr, -1, budget))
    return _finish(tr, statuses)


def trace_curve_pc(sys: QuadraticSystem, direction: CurveDirection, start,
                   cfg: HebcConfig | None = None, curve_id=None) -> TraceResult:
    """Reference tracer using predictor-corrector steps only.

    A cycle means a step jumped to a nearby branch; the curve is then
    traced again with half the step bound.  Step counts and times include
    the abandoned attempts.
    """
    cfg = cfg or HebcConfig()
    spent = [0, 0, 0.0]
    for attempt in range(PC_RETRIES + 1):
        res = _trace_pc_once(sys, direction, start, cfg, curve_id)
        if "cycled" not in res.exits or attempt == PC_RETRIES:
            break
        spent = [spent[0] + res.n_pc, spent[1] + res.n_pc_rejected, spent[2] + res.pc_time]
        h_max = max(cfg.pc.h_max / 2, cfg.pc.h_init)
        log.info("curve %s cycled; retracing with h_max %.3g", curve_id or direction.l, h_max)
        cfg = replace(cfg, pc=replace(cfg.pc, h_max=h_max))
    res.n_pc += spent[0]
    res.n_pc_rejected += spent[1]
    res.pc_time += spent[2]
    return res


def _trace_pc_once(sys, direction, start, cfg: HebcConfig, curve_id) -> TraceResult:
    tr = _Trace(sys, direction, start, cfg, curve_id)
    statuses = []
    remaining = cfg.max_pc_steps
    for sign in (+1, -1):
        tr.recent.clear()
        tvec = _initial_tangent(sys, direction, tr.start, sign)
        trav, stop = _run_pc(tr, [tr.start], cfg.pc.h_init, tvec, False,
                             max_steps=remaining, exit_on_turn=False)
        remaining -= len(trav.points)
        if stop == "closed":
            statuses.append("closed")
        elif stop in ("escaped", "cycled"):
            statuses.append(stop)
        elif trav.status == "stuck":
            statuses.append("stuck")
        else:
            statuses.append("budget_exhausted")
        if statuses[-1] != "escaped" or remaining <= 0:
            break
    return _finish(tr, statuses)


def step_log_csv(rows, state: bool = False) -> str:
    """Step log as CSV; ``state=True`` appends the state vector ``u_1..u_n``."""
    head = ["curve_id", "routine", "arc_param", "alpha", "iters", "h", "r_m"]
    if state and rows:
        head += [f"u{j + 1}" for j in range(len(rows[0][7]))]
    lines = [",".join(head)]
    for cid, routine, s, a, it, h, r, u in rows:
        cols = [str(cid), routine, repr(float(s)), repr(float(a)),
                "" if it is None else str(it),
                "" if h is None else repr(float(h)),
                "" if r is None or math.isinf(r) else repr(float(r))]
        if state:
            cols += [repr(float(x)) for x in u]
        lines.append(",".join(cols))
    return "\n".join(lines) + "\n"
