"""Predictor-corrector curve tracing in ``(u, alpha)`` space.

Steps are measured in Euclidean arclength over the concatenated vector
``z = (u, alpha)``.  The corrector solves the parameterized equations
augmented with a hyperplane through the predicted point, normal to the
prediction direction, so folds in ``alpha`` pose no difficulty.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .curve_design import CurveDirection
from .errors import CorrectorFailure, PredictionError, StepFloorError
from .quadratic_form import QuadraticSystem, jacobian, residual_and_jacobian


@dataclass
class CurvePoint:
    u: np.ndarray
    alpha: float
    arc_param: float = 0.0

    @property
    def z(self) -> np.ndarray:
        return np.append(self.u, self.alpha)


@dataclass
class PcConfig:
    h_min: float = 1e-8
    h_max: float = 0.5
    h_init: float = 1e-3
    newton_tol: float = 1e-8
    newton_max_iters: int = 10
    r_max: float = 2e4
    grow: float = 2.0
    shrink: float = 0.5
    max_correction_ratio: float = 0.1   # reject if |corrected - predicted| > ratio * h
    max_contraction: float = 0.5        # reject if Newton updates shrink slower than this
    min_turn_cos: float = 0.8           # reject steps turning by more than ~37 degrees
    max_steps: int = 20000              # per traversal

    def __post_init__(self):
        if not (0 < self.h_min <= self.h_init <= self.h_max):
            raise ValueError("need 0 < h_min <= h_init <= h_max")
        if self.r_max <= 0:
            raise ValueError("r_max must be positive")


@dataclass
class NewtonResult:
    point: CurvePoint
    iterations: int
    history: list
    contraction: float = 0.0    # largest ratio of successive Newton update norms


def newton_correct(sys: QuadraticSystem, direction: CurveDirection, u, alpha: float,
                   normal=None, tol: float = 1e-8, max_iters: int = 10) -> NewtonResult:
    """Newton's method on the curve equations.

    With ``normal`` given, the extra equation ``normal . (z - z_pred) = 0``
    closes the system (pseudo-arclength); otherwise ``alpha`` is held fixed.
    Raises :class:`CorrectorFailure` on non-convergence or a singular system.
    """
    n = sys.n
    d = direction.d
    z0 = np.append(np.asarray(u, dtype=float), alpha)
    z = z0.copy()
    hist = []
    last_dz = None
    theta = 0.0
    polished = False
    if normal is not None:
        normal = np.asarray(normal, dtype=float)
        nn = np.linalg.norm(normal)
        if nn == 0:
            raise ValueError("hyperplane normal must be nonzero")
        normal = normal / nn
    for it in range(max_iters + 2):     # one spare pass for the polishing update
        f, jac = residual_and_jacobian(sys, z[:n])
        f -= z[n] * d
        err = np.max(np.abs(f)) if n else 0.0
        if normal is not None:
            err = max(err, abs(normal @ (z - z0)))
        hist.append(err)
        if not np.isfinite(err) or err > 1e8:
            raise CorrectorFailure(f"corrector diverged (residual {err:.3g})")
        if err < tol:
            if polished or last_dz is None or last_dz <= tol:
                return NewtonResult(CurvePoint(z[:n].copy(), float(z[n])), it - polished,
                                    hist, theta)
            # a small residual only bounds the position by tol / sigma_min;
            # one more update squares the position error near singular points
            polished = True
        elif it >= max_iters:
            break
        try:
            if normal is None:
                dz = np.append(np.linalg.solve(jac, f), 0.0)
            else:
                a = np.empty((n + 1, n + 1))
                a[:n, :n] = jac
                a[:n, n] = -d
                a[n] = normal
                dz = np.linalg.solve(a, np.append(f, normal @ (z - z0)))
        except np.linalg.LinAlgError:
            raise CorrectorFailure("singular corrector system") from None
        step = np.linalg.norm(dz)
        if last_dz and not polished:
            theta = max(theta, step / last_dz)
        last_dz = step
        z -= dz
    raise CorrectorFailure(f"corrector did not converge in {max_iters} iterations "
                           f"(residual {hist[-1]:.3g})")


def tangent(sys: QuadraticSystem, direction: CurveDirection, u, alpha: float, ref=None):
    """Unit tangent of the curve at ``(u, alpha)``, oriented along ``ref``."""
    n = sys.n
    a = np.hstack([jacobian(sys, u), -direction.d[:, None]])
    t = None
    if ref is not None:
        ref = np.asarray(ref, dtype=float)
        try:
            t = np.linalg.solve(np.vstack([a, ref]), np.eye(n + 1)[n])
        except np.linalg.LinAlgError:
            t = None
    if t is None or not np.all(np.isfinite(t)):
        t = np.linalg.svd(a)[2][-1]
    t = t / np.linalg.norm(t)
    if ref is not None and t @ ref < 0:
        t = -t
    return t


def quadratic_predict(points, h: float, tangent_vec=None) -> np.ndarray:
    """Extrapolate ``z`` to arclength ``points[-1].arc_param + h``.

    Three points give Lagrange quadratic extrapolation in the arc
    parameter, two give a secant, and a single point needs ``tangent_vec``.
    """
    pts = list(points)[-3:]
    if not pts:
        raise PredictionError("no points to predict from")
    last = pts[-1]
    if len(pts) == 1:
        if tangent_vec is None:
            raise PredictionError("single-point prediction needs a tangent")
        return last.z + h * np.asarray(tangent_vec)
    s = [p.arc_param for p in pts]
    if len(set(s)) < len(s):
        raise PredictionError("coincident points")
    target = s[-1] + h
    if len(pts) == 2:
        w = (target - s[0]) / (s[1] - s[0])
        return pts[0].z + w * (pts[1].z - pts[0].z)
    out = np.zeros_like(last.z)
    for i, p in enumerate(pts):
        li = 1.0
        for j in range(3):
            if j != i:
                li *= (target - s[j]) / (s[i] - s[j])
        out += li * p.z
    return out


def adapt_step(h: float, iters_used: int | None, cfg: PcConfig) -> float:
    """Step-size policy: double on fast convergence, halve on slow or failed steps.

    ``iters_used=None`` means the step failed.  Raises
    :class:`StepFloorError` when a shrink would go below ``h_min``.
    """
    if iters_used is None or iters_used >= 5:
        h_new = h * cfg.shrink
        if h_new < cfg.h_min * (1 - 1e-12):
            raise StepFloorError(f"step size {h_new:.3g} below floor {cfg.h_min:.3g}")
    elif iters_used <= 2:
        h_new = h * cfg.grow
    else:
        h_new = h
    return min(max(h_new, cfg.h_min), cfg.h_max)


def secant_slope(p_prev: CurvePoint, p_curr: CurvePoint) -> float:
    """Largest absolute secant slope ``|du_k / dalpha|`` between two points."""
    da = p_curr.alpha - p_prev.alpha
    if da == 0:
        return math.inf
    return float(np.max(np.abs(p_curr.u - p_prev.u)) / abs(da))


@dataclass
class WarmStart:
    s_pc: float
    d_hp: float | None
    back_points: list       # ordered along the direction of travel, excluding last_hp
    warm: bool


def warm_start(sys, direction, last_hp: CurvePoint, evaluate, p_min, last_dh: float,
               travel_sign: int, cfg: PcConfig) -> WarmStart:
    """Initial predictor-corrector data from the last holomorphic point.

    ``evaluate(t)`` returns the Pade-approximated state at local parameter
    ``t`` of the embedding centred at ``last_hp``.  The step is a fifth of
    the estimated distance to the singularity, capped at 0.45 of the last
    holomorphic step; two backward points at ``-s_pc`` and ``-2 s_pc`` are
    corrected at fixed alpha.  Without a pole estimate this degrades to a
    cold start from ``last_hp`` alone with ``s_pc = h_init``.
    """
    if p_min is None or evaluate is None:
        return WarmStart(cfg.h_init, None, [], False)
    d_hp = abs(p_min)
    s_pc = min(d_hp / 5.0, 0.45 * abs(last_dh))
    if not s_pc > 0:
        return WarmStart(cfg.h_init, None, [], False)
    back = []
    try:
        for k in (2, 1):
            t = -travel_sign * k * s_pc
            u = evaluate(t)
            res = newton_correct(sys, direction, u, last_hp.alpha + t,
                                 tol=cfg.newton_tol, max_iters=cfg.newton_max_iters)
            back.append(res.point)
    except CorrectorFailure:
        return WarmStart(cfg.h_init, None, [], False)
    # arc parameters counted backwards from last_hp
    b2, b1 = back
    d1 = np.linalg.norm(last_hp.z - b1.z)
    d2 = np.linalg.norm(b1.z - b2.z)
    if d1 == 0 or d2 == 0:
        return WarmStart(cfg.h_init, None, [], False)
    b1.arc_param = last_hp.arc_param - d1
    b2.arc_param = b1.arc_param - d2
    return WarmStart(s_pc, d_hp, [b2, b1], True)


def locate_crossing(sys, direction, prev: CurvePoint, nxt: CurvePoint, cfg: PcConfig,
                    tol: float = 1e-12, max_iters: int = 60) -> CurvePoint:
    """Curve point with ``alpha = 0`` between two points of opposite alpha sign.

    Regula falsi (Illinois variant) on the distance along the chord; each
    evaluation corrects onto the curve through the hyperplane normal to
    the chord, so steep stretches near folds are handled.
    """
    if not prev.alpha * nxt.alpha < 0:
        raise ValueError("points do not bracket alpha = 0")
    v = nxt.z - prev.z
    length = float(np.linalg.norm(v))
    v = v / length
    lo, hi = 0.0, length
    f_lo, f_hi = prev.alpha, nxt.alpha
    side = 0
    best = prev if abs(prev.alpha) < abs(nxt.alpha) else nxt
    for _ in range(max_iters):
        s = (lo * f_hi - hi * f_lo) / (f_hi - f_lo)
        if not lo < s < hi:
            s = 0.5 * (lo + hi)
        z = prev.z + s * v
        pt = newton_correct(sys, direction, z[:-1], z[-1], normal=v, tol=cfg.newton_tol,
                            max_iters=cfg.newton_max_iters).point
        f = pt.alpha
        if abs(f) < abs(best.alpha):
            best = pt
        if abs(f) < tol or hi - lo < 1e-14 * length:
            break
        if f * f_lo > 0:
            lo, f_lo = s, f
            if side == -1:
                f_hi *= 0.5
            side = -1
        else:
            hi, f_hi = s, f
            if side == 1:
                f_lo *= 0.5
            side = 1
    return best


@dataclass
class Traversal:
    points: list = field(default_factory=list)   # accepted points, excluding seeds
    exit_point: CurvePoint | None = None
    direction_changed: bool = False
    status: str = "running"     # exited | stopped | budget | stuck
    iterations: int = 0
    slopes: list = field(default_factory=list)
    steps: list = field(default_factory=list)    # (corrector iterations, step size) per point
    rejected: int = 0
    h: float = 0.0


def pc_step(sys, direction, history, h, cfg: PcConfig, tangent_vec=None):
    """One predictor-corrector step from ``history[-1]``.

    Returns ``(point, iterations)``; raises :class:`CorrectorFailure` when
    the corrector fails or the result looks like a branch jump.
    """
    last = history[-1]
    pred = quadratic_predict(history, h, tangent_vec)
    v = pred - last.z
    if not np.any(v):
        raise CorrectorFailure("degenerate prediction")
    res = newton_correct(sys, direction, pred[:-1], pred[-1], normal=v,
                         tol=cfg.newton_tol, max_iters=cfg.newton_max_iters)
    pt = res.point
    zc = pt.z
    if res.contraction > cfg.max_contraction:
        raise CorrectorFailure("slow corrector contraction")
    if np.linalg.norm(zc - pred) > cfg.max_correction_ratio * h:
        raise CorrectorFailure("correction too large")
    step = zc - last.z
    ds = np.linalg.norm(step)
    if ds == 0:
        raise CorrectorFailure("zero step")
    if len(history) >= 2:
        ref = last.z - history[-2].z
    else:
        ref = tangent_vec
    if ref is not None:
        cos = step @ ref / (ds * np.linalg.norm(ref))
        if cos < cfg.min_turn_cos:
            raise CorrectorFailure("step reverses direction")
    pt.arc_param = last.arc_param + ds
    return pt, res.iterations


def traverse_singularity(sys, direction, seeds, cfg: PcConfig, h0=None, tangent_vec=None,
                         on_point=None, max_steps=None, exit_on_turn=True,
                         direction_changed=False, min_steps: int = 1) -> Traversal:
    """Predictor-corrector steps until the curve has turned in alpha and flattened.

    Exit rule: after a sign change of successive alpha increments, stop as
    soon as the secant slope drops to ``cfg.r_max``.  Later sign changes
    restart that watch.  At least ``min_steps`` points are taken before
    an exit.  ``on_point(prev, point)`` is called for every
    accepted point and may return True to stop early (status ``stopped``).
    """
    history = list(seeds)
    h = min(max(h0 if h0 is not None else cfg.h_init, cfg.h_min), cfg.h_max)
    out = Traversal(direction_changed=direction_changed, h=h)
    max_steps = cfg.max_steps if max_steps is None else max_steps
    tvec = tangent_vec
    last_da = None
    if len(history) >= 2:
        last_da = history[-1].alpha - history[-2].alpha
    failed = False
    while len(out.points) < max_steps:
        try:
            if failed and len(history) >= 2:
                # widely spaced history extrapolates poorly at short range
                ref = history[-1].z - history[-2].z
                tv = tangent(sys, direction, history[-1].u, history[-1].alpha, ref)
                pt, iters = pc_step(sys, direction, history[-1:], h, cfg, tv)
            else:
                pt, iters = pc_step(sys, direction, history, h, cfg, tvec)
        except (CorrectorFailure, PredictionError):
            failed = True
            out.rejected += 1
            try:
                h = adapt_step(h, None, cfg)
            except StepFloorError:
                out.status = "stuck"
                break
            continue
        out.iterations += iters
        prev = history[-1]
        tvec = None
        history.append(pt)
        if len(history) > 3:
            history.pop(0)
        out.points.append(pt)
        out.steps.append((iters, h))
        da = pt.alpha - prev.alpha
        if last_da is not None and da * last_da < 0:
            out.direction_changed = True
        if da != 0:
            last_da = da
        r_m = secant_slope(prev, pt)
        out.slopes.append(r_m)
        if on_point is not None and on_point(prev, pt):
            out.status = "stopped"
            break
        if (exit_on_turn and out.direction_changed and r_m <= cfg.r_max
                and len(out.points) >= min_steps):
            out.status = "exited"
            break
        if not failed:
            h = adapt_step(h, iters, cfg)
        failed = False
    else:
        out.status = "budget"
    out.h = h
    out.exit_point = out.points[-1] if out.points else history[-1]
    return out
