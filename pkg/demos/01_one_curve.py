"""Trace one curve of case9 and watch the two routines take turns.

Run: python demos/01_one_curve.py
"""
from multiflow import build_system, design_curves, load_case, regularize_lossless
from multiflow.enumerator import initial_solution
from multiflow.hebc_tracer import trace_curve
from multiflow.quadratic_form import residual

net = regularize_lossless(load_case("case9"))
sys_ = build_system(net)
u0 = initial_solution(net, sys_)
print(f"case9: {net.n_bus} buses, state dimension {sys_.n}")
print(f"base operating point residual {abs(residual(sys_, u0)).max():.1e}")

# curve l frees equation l; every point on it solves the other equations
direction = design_curves(sys_)[3]
res = trace_curve(sys_, direction, u0)
print(f"\ncurve {direction.l}: {res.status}, {res.n_holo} holomorphic steps, "
      f"{res.n_pc} predictor-corrector steps")

# each entry into the predictor-corrector routine is a fold in alpha
for ev in res.switches:
    if ev["kind"] == "enter_pc":
        extra = f" (warm start s_pc={ev['s_pc']:.2e})" if ev.get("warm") else ""
        print(f"  switch at alpha={ev['alpha']:+.4f}: {ev['reason']}{extra}")

print(f"\nsolutions crossed by this curve: {len(res.solutions)}")
for u in res.solutions:
    v = sys_.to_complex(u)
    print("  |V| =", " ".join(f"{abs(x):.3f}" for x in v))
