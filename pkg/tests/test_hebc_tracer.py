"""Hybrid holomorphic / predictor-corrector tracer.

Most checks run on the case9 curves through the base operating point,
traced once per module by both tracers.
"""
import math

import numpy as np
import pytest

from conftest import GOOD_MAP, TWO_BUS
from multiflow import build_system, design_curves, parse_case
from multiflow.curve_design import CurveDirection
from multiflow.enumerator import initial_solution
from multiflow.hebc_tracer import (ACCEPTED, CORRECTOR_FAILED, PROGRESS_TOO_SMALL, HebcConfig,
                                   _CHECK, _max_mismatch, build_evaluator, check_closure,
                                   choose_delta, detect_solution, holo_step, step_log_csv,
                                   trace_curve, trace_curve_pc)
from multiflow.pade import min_pole
from multiflow.pc_engine import CurvePoint, newton_correct, tangent
from multiflow.quadratic_form import residual

SWITCH_REASONS = {CORRECTOR_FAILED, PROGRESS_TOO_SMALL, "solution_miss", "retreat"}


@pytest.fixture(scope="module")
def base9(case9):
    net, sys = case9
    return sys, initial_solution(net, sys), design_curves(sys)


@pytest.fixture(scope="module")
def traces9(base9):
    sys, u0, dirs = base9
    return [(trace_curve(sys, d, u0), trace_curve_pc(sys, d, u0)) for d in dirs]


def row_point(row):
    return CurvePoint(np.asarray(row[7]), row[3], row[2])


def as_set(sols, tol=1e-4):
    """Solutions as a list of canonical arrays, for tolerance comparisons."""
    out = []
    for u in sols:
        u = np.asarray(u)
        if not any(np.max(np.abs(u - v)) < tol for v in out):
            out.append(u)
    return out


def same_sets(a, b, tol=1e-4):
    a, b = as_set(a, tol), as_set(b, tol)
    return len(a) == len(b) and all(any(np.max(np.abs(x - y)) < tol for y in b) for x in a)


# ---------------------------------------------------------------- step choice

def test_choose_delta_grows_to_cap_without_constraints():
    cfg = HebcConfig(dp_max=math.inf, delta_max=50.0)
    d = choose_delta(lambda d: True, None, cfg)
    assert 0.5 * cfg.delta_max < d <= cfg.delta_max


@pytest.mark.parametrize("p_min", [0.3, -0.3, 2.5, 1e-3])
def test_choose_delta_pole_bound_binds(p_min):
    d = choose_delta(lambda d: True, p_min, HebcConfig())
    assert 0.9 * abs(p_min) <= d < abs(p_min)


@pytest.mark.parametrize("limit", [0.07, 0.4, 3e-4])
def test_choose_delta_mismatch_bound_binds(limit):
    d = choose_delta(lambda d: d < limit, None, HebcConfig())
    assert 0.9 * limit <= d < limit


def test_choose_delta_whichever_binds_first():
    d = choose_delta(lambda d: d < 0.2, 0.5, HebcConfig())
    assert 0.18 <= d < 0.2
    d = choose_delta(lambda d: d < 0.5, 0.2, HebcConfig())
    assert 0.18 <= d < 0.2


def test_choose_delta_too_small():
    assert choose_delta(lambda d: False, None, HebcConfig()) is None
    assert choose_delta(lambda d: True, 1e-7, HebcConfig()) is None


def test_config_validation():
    with pytest.raises(ValueError):
        HebcConfig(i_max=3)
    with pytest.raises(ValueError):
        HebcConfig(dp_max=0)
    with pytest.raises(ValueError):
        HebcConfig(max_holo_steps=0)


# ---------------------------------------------------------------- holomorphic step

def test_holo_step_far_from_singularity(base9):
    sys, u0, dirs = base9
    cfg = HebcConfig()
    start = CurvePoint(u0, 0.0)
    for d in dirs[:6]:
        for sign in (1, -1):
            st = holo_step(sys, d, start, sign, cfg)
            assert st.outcome == ACCEPTED
            if st.p_min is not None:
                assert st.delta < abs(st.p_min)
            assert np.sign(st.next.alpha) == sign
            assert st.next.alpha == pytest.approx(sign * st.delta, abs=1e-9)
            # the predicted stretch honours the mismatch bound
            ts = sign * st.delta * _CHECK
            assert _max_mismatch(sys, d, st.evaluator.many(ts), ts) < cfg.dp_max
            # and the step is within 10% of the binding limit
            wider = sign * st.delta * 1.1
            pole_binds = st.p_min is not None and abs(wider) >= abs(st.p_min)
            ts = wider * _CHECK
            mismatch_binds = _max_mismatch(sys, d, st.evaluator.many(ts), ts) >= cfg.dp_max
            assert pole_binds or mismatch_binds or st.delta * 1.1 > cfg.delta_max
            res = residual(sys, st.next.u) - st.next.alpha * d.d
            assert np.max(np.abs(res)) < cfg.pc.newton_tol


@pytest.fixture(scope="module")
def fold_setup(base9, traces9):
    """Holomorphic trace of curve 4 and the first fold it runs into at negative alpha."""
    sys, u0, dirs = base9
    d = dirs[3]
    rows = traces9[3][0].step_log
    # the first switch into predictor-corrector at negative alpha
    k = next(i for i in range(1, len(rows))
             if rows[i][1] == "pc" and rows[i - 1][1] == "holo" and rows[i][3] < 0)
    j = k
    while rows[j + 1][1] == "pc":
        j += 1
    fold = bisect_fold(sys, d, [row_point(r) for r in rows[k - 1:j + 1]])
    return sys, d, rows, k, fold


def bisect_fold(sys, d, pts):
    """Alpha at the turning point among consecutive curve points, by bisection.

    The turning point is where the alpha component of the curve tangent
    changes sign; bisection runs on the chord between the two bracketing
    points, correcting onto the curve through the chord-normal hyperplane.
    """
    pts = sorted(pts, key=lambda p: p.arc_param)
    ref = pts[1].z - pts[0].z

    def slope(p, ref):
        return tangent(sys, d, p.u, p.alpha, ref)[-1]

    tans = [slope(p, ref) for p in pts]
    i = next(i for i in range(len(pts) - 1) if tans[i] * tans[i + 1] < 0)
    a, b = pts[i], pts[i + 1]
    v = b.z - a.z
    lo, hi, f_lo = 0.0, 1.0, tans[i]
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        z = a.z + mid * v
        p = newton_correct(sys, d, z[:-1], z[-1], normal=v, tol=1e-12).point
        f = slope(p, v)
        if f * f_lo > 0:
            lo, f_lo = mid, f
        else:
            hi = mid
    return p.alpha


def test_holo_step_adjacent_to_fold(fold_setup):
    sys, d, rows, k, fold = fold_setup
    last = row_point(rows[k - 1])
    assert abs(last.alpha - fold) < 1e-4
    sign = 1 if fold > last.alpha else -1
    st = holo_step(sys, d, last, sign, HebcConfig())
    assert st.outcome in (CORRECTOR_FAILED, PROGRESS_TOO_SMALL)
    st = holo_step(sys, d, last, sign, HebcConfig(d_alpha_min=1e-4))
    assert st.outcome == PROGRESS_TOO_SMALL


def test_pole_estimate_locates_fold(fold_setup):
    sys, d, rows, k, fold = fold_setup
    sign = 1 if fold > rows[k - 1][3] else -1
    # holomorphic points on the approach, a fair distance from the fold
    checked = 0
    for row in rows[:k]:
        dist = fold - row[3]
        if row[1] != "holo" or not 0.05 < sign * dist < 0.5:
            continue
        ev = build_evaluator(sys, d, row_point(row), 15)
        p = min_pole(ev.pades, sign)
        assert p is not None
        predicted = row[3] + p
        assert abs(predicted - fold) <= 0.05 * abs(dist)
        checked += 1
    assert checked >= 1


# ---------------------------------------------------------------- solution detection

def _crossing_pair(rows):
    for a, b in zip(rows, rows[1:]):
        if a[3] * b[3] < 0 and a[1] == b[1] == "holo":
            return row_point(a), row_point(b)
    raise AssertionError("no holomorphic crossing in the log")


def test_detect_solution_on_sign_change(base9, traces9):
    sys, u0, dirs = base9
    d = dirs[3]
    a, b = _crossing_pair(traces9[3][0].step_log)
    crossed, u = detect_solution(a, b, sys, d, HebcConfig())
    assert crossed and u is not None
    assert np.max(np.abs(residual(sys, u))) < 1e-6
    # the same root is reported by the trace
    assert any(np.max(np.abs(u - s)) < 1e-6 for s in traces9[3][0].solutions)


def test_detect_solution_without_sign_change(base9, traces9):
    sys, u0, dirs = base9
    rows = traces9[3][0].step_log
    a, b = next((row_point(x), row_point(y)) for x, y in zip(rows, rows[1:])
                if x[3] * y[3] > 0)
    assert detect_solution(a, b, sys, dirs[3], HebcConfig()) == (False, None)


def test_detect_solution_guess_must_stay_close(base9, traces9):
    sys, u0, dirs = base9
    a, b = _crossing_pair(traces9[3][0].step_log)
    # Newton from a far guess lands elsewhere or fails: a miss
    crossed, u = detect_solution(a, b, sys, dirs[3], HebcConfig(), guess=a.u + 0.3)
    assert crossed and u is None


# ---------------------------------------------------------------- closure

def test_check_closure():
    cfg = HebcConfig()
    start = CurvePoint(np.zeros(3), 0.0)
    near = CurvePoint(np.full(3, 1e-5), 1e-5)
    far = CurvePoint(np.ones(3), 0.5)
    assert check_closure([start, far, far, near], start, 5.0, cfg)
    assert not check_closure([start, near], start, 5.0, cfg)            # warm-up
    assert not check_closure([start, far, near], start, 5e-4, cfg)      # too short
    assert not check_closure([start, far, far, far], start, 5.0, cfg)   # open


# ---------------------------------------------------------------- whole curves

def test_two_bus_elliptical_curves_close():
    net = parse_case(TWO_BUS)
    sys = build_system(net)
    u0 = initial_solution(net, sys)
    for d in design_curves(sys, "user_file", e_matrix=GOOD_MAP):
        res = trace_curve(sys, d, u0)
        assert res.status == "closed"
        assert len(res.solutions) >= 1
        assert np.max(np.abs(res.solutions[0] - u0)) == 0


def test_two_bus_identity_curves_finish():
    # identity curves need not be compact; they close or escape both ways
    net = parse_case(TWO_BUS)
    sys = build_system(net)
    u0 = initial_solution(net, sys)
    for d in design_curves(sys):
        res = trace_curve(sys, d, u0)
        assert res.status in ("closed", "open")
        assert np.max(np.abs(res.solutions[0] - u0)) == 0


def test_reported_solutions_are_roots(base9, traces9):
    sys, u0, dirs = base9
    for hebc, pc in traces9:
        for res in (hebc, pc):
            for u in res.solutions:
                assert np.max(np.abs(residual(sys, u))) < 1e-6
                # a verification Newton step barely moves it
                step = newton_correct(sys, dirs[0], u, 0.0, tol=1e-12).point.u
                assert np.max(np.abs(step - u)) < 1e-8


def test_tracers_agree_per_curve(traces9):
    for hebc, pc in traces9:
        assert hebc.status == pc.status
        assert same_sets(hebc.solutions, pc.solutions)


def test_hybrid_takes_fewer_steps(traces9):
    holo = sum(h.n_holo + h.n_pc for h, _ in traces9)
    pc = sum(p.n_pc for _, p in traces9)
    assert holo < 0.5 * pc


def test_switch_soundness(traces9):
    for hebc, _ in traces9:
        kinds = [e["kind"] for e in hebc.switches]
        assert all(e["reason"] in SWITCH_REASONS for e in hebc.switches
                   if e["kind"] == "enter_pc")
        # switches alternate: every entry has a matching exit
        assert kinds[::2] == ["enter_pc"] * len(kinds[::2])
        assert all(k == "exit_pc" for k in kinds[1::2])


def test_warm_start_cap_on_every_switch(traces9):
    seen = 0
    for hebc, _ in traces9:
        for e in hebc.switches:
            if e["kind"] == "enter_pc" and e.get("warm"):
                assert e["s_pc"] <= e["d_hp"] / 5 * (1 + 1e-12)
                assert e["s_pc"] <= 0.45 * e["last_dh"] * (1 + 1e-12)
                seen += 1
    assert seen > 20


def test_opposite_direction_gives_same_solutions(base9, traces9):
    sys, u0, dirs = base9
    for d, (hebc, _) in zip(dirs, traces9):
        if hebc.status != "closed":
            continue
        rev = trace_curve(sys, CurveDirection(d.l, -d.d), u0)
        assert rev.status == "closed"
        assert same_sets(rev.solutions, hebc.solutions)


def test_open_curves_are_reported(traces9):
    statuses = {h.status for h, _ in traces9}
    assert statuses <= {"closed", "open"}


def test_step_log_csv(traces9):
    res = traces9[1][0]
    text = step_log_csv(res.step_log)
    lines = text.splitlines()
    assert lines[0] == "curve_id,routine,arc_param,alpha,iters,h,r_m"
    assert len(lines) == len(res.step_log) + 1
    assert {ln.split(",")[1] for ln in lines[1:]} == {"holo", "pc"}
    arcs = [float(ln.split(",")[2]) for ln in lines[1:]]
    assert all(b >= a for a, b in zip(arcs, arcs[1:]))
    wide = step_log_csv(res.step_log, state=True).splitlines()
    assert wide[0].endswith(f"u{len(res.step_log[0][7])}")
