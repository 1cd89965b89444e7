"""Enumeration of multiple power flow solutions by hybrid curve tracing."""
from .case_model import Network, build_admittance, load_case, parse_case, regularize_lossless
from .curve_design import design_curves
from .enumerator import EnumConfig, find_all_solutions, initial_solution
from .hebc_tracer import HebcConfig, trace_curve, trace_curve_pc
from .metrics import avg_steps_per_dim, complexity_estimates, equivalent_steps
from .quadratic_form import build_system, jacobian, residual

__all__ = [
    "EnumConfig", "HebcConfig", "Network", "avg_steps_per_dim", "build_admittance",
    "build_system", "complexity_estimates", "design_curves", "equivalent_steps",
    "find_all_solutions", "initial_solution", "jacobian", "load_case", "parse_case",
    "regularize_lossless", "residual", "trace_curve", "trace_curve_pc",
]

__version__ = "0.1.0"
