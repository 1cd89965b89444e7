"""Pade poles see a fold coming.

From a point some distance before a turning point of a case9 curve, the
nearest real pole of the Pade approximants estimates where the curve
turns back.  We compare against the turning point the tracer later finds.

Run: python demos/03_pole_predicts_fold.py
"""
import numpy as np

from multiflow import build_system, design_curves, load_case, regularize_lossless
from multiflow.enumerator import initial_solution
from multiflow.hebc_tracer import build_evaluator, trace_curve
from multiflow.pade import min_pole
from multiflow.pc_engine import CurvePoint

net = regularize_lossless(load_case("case9"))
sys_ = build_system(net)
u0 = initial_solution(net, sys_)
direction = design_curves(sys_)[3]
rows = trace_curve(sys_, direction, u0).step_log

# first turning point at negative alpha: where the log switches to pc
k = next(i for i in range(1, len(rows))
         if rows[i][1] == "pc" and rows[i - 1][1] == "holo" and rows[i][3] < 0)
j = k
while rows[j + 1][1] == "pc":
    j += 1
fold = min(r[3] for r in rows[k:j + 1])
print(f"turning point found by the tracer: alpha = {fold:.5f}")

for row in rows[:k]:
    if row[1] != "holo" or not 1e-3 < row[3] - fold < 2.0:
        continue
    pt = CurvePoint(np.asarray(row[7]), row[3])
    p = min_pole(build_evaluator(sys_, direction, pt, 15).pades, -1)
    if p is None:
        continue
    est = row[3] + p
    print(f"  from alpha = {row[3]:+.4f}: pole says {est:+.5f} "
          f"(error {abs(est - fold) / abs(row[3] - fold):.1%} of the distance)")
