"""Find every power flow solution of a case with both tracers and compare.

Run: python demos/02_enumerate.py [case]   (default case9)
"""
import sys

from multiflow import load_case, regularize_lossless
from multiflow.enumerator import EnumConfig, find_all_solutions
from multiflow.metrics import equivalent_steps
from multiflow.reports import symmetric_difference

name = sys.argv[1] if len(sys.argv) > 1 else "case9"
net = regularize_lossless(load_case(name))

runs = {}
for tracer in ("hebc", "pc"):
    sset, rep, _ = find_all_solutions(net, EnumConfig(tracer=tracer))
    runs[tracer] = (sset, rep)
    print(f"{tracer:>4}: {len(sset)} solutions, {rep.holo_steps} holomorphic + "
          f"{rep.pc_steps} predictor-corrector steps, {rep.total_time:.1f} s, "
          f"{rep.completeness}")

(he, he_rep), (pc, pc_rep) = runs["hebc"], runs["pc"]
only_he, only_pc = symmetric_difference(he.solutions, pc.solutions)
print("same solution sets:", not only_he and not only_pc)
n_eqv = equivalent_steps(pc_rep.pc_steps, he_rep.pc_steps, he_rep.holo_steps)
ratio = (he_rep.holo_steps + he_rep.pc_steps) / pc_rep.pc_steps
print(f"one holomorphic step stands for {n_eqv:.1f} predictor-corrector steps")
print(f"hybrid/full step ratio {ratio:.2f}")
