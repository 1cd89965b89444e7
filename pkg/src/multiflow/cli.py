"""Command line front end.

Exit codes: 0 success, 2 I/O or usage error, 3 parse or model error,
4 numerical failure (including diverging tracer comparisons).
Verbosity comes from the ``MULTIFLOW_LOG`` environment variable
(a logging level name such as ``INFO`` or ``DEBUG``).
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import reports
from .case_model import load_case, regularize_lossless
from .curve_design import STRATEGIES, design_curves
from .enumerator import EnumConfig, find_all_solutions, initial_solution
from .errors import CaseIOError, ModelError, MultiflowError, NumericalError, ParseError
from .hebc_tracer import HebcConfig, step_log_csv, trace_curve, trace_curve_pc
from .metrics import complexity_estimates, equivalent_steps
from .quadratic_form import build_system

log = logging.getLogger("multiflow")

EXIT_OK, EXIT_IO, EXIT_MODEL, EXIT_NUMERICAL = 0, 2, 3, 4


def _setup_logging() -> None:
    level = os.environ.get("MULTIFLOW_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _add_common(p, tracer=True):
    p.add_argument("case", help="case file (.m or .json) or bundled case name")
    if tracer:
        p.add_argument("--tracer", choices=("hebc", "pc"), default="hebc")
    p.add_argument("--curve-strategy", choices=STRATEGIES, default="identity")
    p.add_argument("--e-matrix", help="map file for --curve-strategy user_file")
    p.add_argument("--i-max", type=_positive_int, default=15, help="series truncation degree")
    p.add_argument("--dp-max", type=_positive_float, default=1e-3, help="mismatch bound (p.u.)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=_positive_int, default=1)
    p.add_argument("--out-dir", help="write result files here instead of printing")
    p.add_argument("--no-regularize", action="store_true",
                   help="keep lossless branches as given")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="multiflow",
                                     description="Enumerate multiple power flow solutions.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="one solution by Newton from the flat start")
    p.add_argument("case")
    p.add_argument("--out-dir")
    p.add_argument("--no-regularize", action="store_true")

    p = sub.add_parser("enumerate", help="trace curves until no new solution appears")
    _add_common(p)

    p = sub.add_parser("compare", help="enumerate with both tracers and compare")
    _add_common(p, tracer=False)
    p.add_argument("--baseline", choices=("pc", "hebc"), default="pc",
                   help="tracer playing the predictor-corrector side")

    p = sub.add_parser("trace", help="trace one curve from the base solution")
    _add_common(p)
    p.add_argument("--curve", type=int, required=True, help="1-based curve index")

    p = sub.add_parser("complexity-estimate", help="operation-count model as JSON")
    p.add_argument("--n-bus", type=float, default=1e6)
    p.add_argument("--n-gen", type=float, help="default: 0.2 * n-bus")
    p.add_argument("--i-max", type=_positive_int, default=15)
    p.add_argument("--out-dir")
    return parser


def _load(args):
    net = load_case(args.case)
    net.validate()
    if not args.no_regularize:
        net = regularize_lossless(net)
    log.info("case %s: %d buses, %d branches", net.name or args.case, net.n_bus,
             len(net.branches))
    return net


def _configs(args, tracer):
    if args.i_max < 4:
        raise ModelError("--i-max must be at least 4")
    hebc = HebcConfig(i_max=args.i_max, dp_max=args.dp_max)
    return EnumConfig(tracer=tracer, curve_strategy=args.curve_strategy, e_matrix=args.e_matrix,
                      seed=args.seed, jobs=args.jobs, hebc=hebc)


def _emit(args, files: dict, stdout_key: str) -> None:
    if args.out_dir:
        out = Path(args.out_dir)
        try:
            out.mkdir(parents=True, exist_ok=True)
            for name, text in files.items():
                (out / name).write_text(text)
        except OSError as exc:
            raise CaseIOError(f"cannot write to {out}: {exc}") from exc
    else:
        sys.stdout.write(files[stdout_key])


def cmd_solve(args) -> int:
    net = _load(args)
    sys_ = build_system(net)
    u = initial_solution(net, sys_)
    _emit(args, {"solution.json": reports.dumps(reports.solutions_doc(sys_, [u]))},
          "solution.json")
    return EXIT_OK


def _enumerate(net, sys_, cfg):
    return find_all_solutions(net, cfg, sys=sys_)


def cmd_enumerate(args) -> int:
    net = _load(args)
    sys_ = build_system(net)
    cfg = _configs(args, args.tracer)
    sset, report, _ = _enumerate(net, sys_, cfg)
    sol = reports.solutions_doc(sys_, sset.solutions, sset.provenance, cfg.tracer,
                                cfg.curve_strategy, cfg.seed)
    files = {
        "solutions.json": reports.dumps(sol),
        "run_report.json": reports.dumps(reports.run_report_doc(net.name, report)),
        "summary.csv": reports.summary_csv([(net.name, cfg.tracer, report, len(sset))]),
    }
    _emit(args, files, "solutions.json")
    return EXIT_OK


def cmd_compare(args) -> int:
    net = _load(args)
    sys_ = build_system(net)
    he_set, he_rep, _ = _enumerate(net, sys_, _configs(args, "hebc"))
    pc_set, pc_rep, _ = _enumerate(net, sys_, _configs(args, args.baseline))
    only_he, only_pc = reports.symmetric_difference(he_set.solutions, pc_set.solutions)
    degenerate = args.baseline == "hebc" or he_rep.holo_steps == 0
    n_pc_total = pc_rep.pc_steps + pc_rep.holo_steps
    n_he_total = he_rep.pc_steps + he_rep.holo_steps
    n_eqv = None
    if he_rep.holo_steps > 0:
        n_eqv = equivalent_steps(n_pc_total, he_rep.pc_steps, he_rep.holo_steps)

    def side(rep, n):
        return {"holo_steps": rep.holo_steps, "pc_steps": rep.pc_steps,
                "total_steps": rep.holo_steps + rep.pc_steps, "solutions": n,
                "time_s": rep.total_time, "completeness": rep.completeness}

    doc = {
        "case": net.name,
        "hebc": side(he_rep, len(he_set)),
        "pc": side(pc_rep, len(pc_set)),
        "n_eqv": n_eqv,
        "step_ratio": n_he_total / n_pc_total if n_pc_total else None,
        "sets_equal": not only_he and not only_pc,
        "degenerate": degenerate,
        "only_hebc": [reports.solution_entry(sys_, i, u) for i, u in enumerate(only_he)],
        "only_pc": [reports.solution_entry(sys_, i, u) for i, u in enumerate(only_pc)],
    }
    files = {
        "compare.json": reports.dumps(doc),
        "summary.csv": reports.summary_csv([(net.name, "hebc", he_rep, len(he_set)),
                                            (net.name, args.baseline, pc_rep, len(pc_set))]),
    }
    _emit(args, files, "compare.json")
    if not doc["sets_equal"]:
        log.error("tracers disagree: %d only in hebc, %d only in %s",
                  len(only_he), len(only_pc), args.baseline)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_trace(args, parser) -> int:
    net = _load(args)
    sys_ = build_system(net)
    if not 1 <= args.curve <= sys_.n:
        parser.error(f"--curve must be in 1..{sys_.n}")
    cfg = _configs(args, args.tracer)
    directions = design_curves(sys_, cfg.curve_strategy, e_file=cfg.e_matrix, seed=cfg.seed)
    start = initial_solution(net, sys_)
    fn = trace_curve if args.tracer == "hebc" else trace_curve_pc
    res = fn(sys_, directions[args.curve - 1], start, cfg.hebc)
    files = {
        "step_log.csv": step_log_csv(res.step_log, state=True),
        "trace_report.json": reports.dumps(
            reports.trace_report_doc(sys_, args.curve, args.tracer, res)),
    }
    _emit(args, files, "step_log.csv")
    return EXIT_OK


def cmd_complexity(args) -> int:
    n_gen = 0.2 * args.n_bus if args.n_gen is None else args.n_gen
    try:
        cm = complexity_estimates(args.n_bus, n_gen, args.i_max)
    except ValueError as exc:
        raise ModelError(str(exc)) from None
    _emit(args, {"cost_model.json": reports.dumps(cm.to_dict())}, "cost_model.json")
    return EXIT_OK


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "solve":
            return cmd_solve(args)
        if args.command == "enumerate":
            return cmd_enumerate(args)
        if args.command == "compare":
            return cmd_compare(args)
        if args.command == "trace":
            return cmd_trace(args, parser)
        return cmd_complexity(args)
    except CaseIOError as exc:
        log.error("%s", exc)
        return EXIT_IO
    except (ParseError, ModelError) as exc:
        log.error("%s", exc)
        return EXIT_MODEL
    except NumericalError as exc:
        log.error("%s", exc)
        return EXIT_NUMERICAL
    except MultiflowError as exc:
        log.error("%s", exc)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
