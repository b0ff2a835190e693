"""Command-line front end.

Exit codes: 0 success, 2 infeasible, 1 any error (one line on stderr).
"""

from __future__ import annotations

import argparse
import importlib
import importlib.util
import json
import math
import sys

from . import bench, tasks
from .cliquetree import build_clique_tree, degree_bound, reduce_neighbors, reshape_dedup_sepsets
from .combinators import Gate, General, Product, Sum, all_of, constant_eta, identity_eta, requirement
from .errors import GmapError
from .fileformat import parse_model
from .inference import Solution
from .losses import LOSS_NAMES, loss_by_name
from .oracle import DEFAULT_BUDGET, brute_force

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2

ETAS = {"identity": identity_eta, "zero": constant_eta(0.0), "one": constant_eta(1.0)}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; 2 is reserved for infeasible here
    def error(self, message):
        raise UsageError(message)


def _states(text: str) -> tuple:
    try:
        return tuple(int(t) for t in text.replace(",", " ").split())
    except ValueError:
        raise UsageError(f"expected integer states, got {text!r}") from None


def _load_h(spec: str):
    """``module:func`` or ``path/to/file.py:func``."""
    target, sep, attr = spec.rpartition(":")
    if not sep or not target or not attr:
        raise UsageError(f"--h expects module:function, got {spec!r}")
    try:
        if target.endswith(".py"):
            s = importlib.util.spec_from_file_location("gmap_user_h", target)
            if s is None or s.loader is None:
                raise ImportError(target)
            mod = importlib.util.module_from_spec(s)
            s.loader.exec_module(mod)
        else:
            mod = importlib.import_module(target)
        return getattr(mod, attr)
    except (ImportError, AttributeError, OSError) as exc:
        raise UsageError(f"cannot load {spec!r}: {exc}") from None


# ---- combinator flags

def _add_combinator_flags(p):
    p.add_argument("--mode", choices=("margin", "slack", "gate", "general"))
    p.add_argument("--loss", help="loss name: " + ", ".join(LOSS_NAMES))
    p.add_argument("--truth", help="ground-truth states, space or comma separated")
    p.add_argument("--positive", help="positive labels for TP/FP losses (default: every non-zero label)")
    p.add_argument("--loss-eta", choices=tuple(ETAS), help="eta over the file's own statistics")
    p.add_argument("--require", action="append", default=None, metavar="'DIM OP VALUE'",
                   help="gate condition, op in eq ne le lt ge gt; repeatable")
    p.add_argument("--h", dest="h_func", metavar="MODULE:FUNC", help="h(f, l) for --mode general")


def _add_tree_flags(p):
    p.add_argument("--root", type=int, default=None)
    p.add_argument("--no-reduce", action="store_true", help="keep cliques with more than three neighbours")
    p.add_argument("--reshape", action="store_true", help="de-duplicate repeated sepsets first")


def _add_output_flags(p):
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--diagnostics", action="store_true")


def _merge_h_block(args, h_block):
    """File ``H`` block entries fill in flags not given on the command line."""
    for key, vals in h_block.items():
        attr = {"eta": "loss_eta", "h": "h_func"}.get(key, key.replace("-", "_"))
        if attr == "require":
            if args.require is None:
                if len(vals) % 3:
                    raise UsageError("H block 'require' needs DIM OP VALUE triples")
                args.require = [" ".join(vals[k:k + 3]) for k in range(0, len(vals), 3)]
        elif attr in ("mode", "loss", "truth", "positive", "loss_eta", "h_func", "root"):
            if getattr(args, attr, None) is None:
                setattr(args, attr, int(vals[0]) if attr == "root" else " ".join(vals))
        else:
            raise UsageError(f"unknown H block key {key!r}")


def _gate_predicate(requires):
    preds = []
    for r in requires or ():
        toks = r.split()
        if len(toks) != 3:
            raise UsageError(f"--require expects 'DIM OP VALUE', got {r!r}")
        try:
            preds.append(requirement(int(toks[0]), toks[1], int(toks[2])))
        except ValueError as exc:
            raise UsageError(f"bad --require {r!r}: {exc}") from None
    return all_of(*preds)


def _problem(args):
    """Resolve (model, combinator, loss) from the model file and flags."""
    model, h_block = parse_model(args.model)
    _merge_h_block(args, h_block)
    mode = args.mode or "margin"
    loss = None
    if args.loss:
        if args.truth is None:
            raise UsageError("--loss needs --truth")
        positive = _states(args.positive) if args.positive else None
        loss = loss_by_name(args.loss, _states(args.truth), model.cardinalities, positive)
        model = tasks.attach(model, loss.factors, loss.accumulation)
        eta = loss.eta
    else:
        if args.truth is not None:
            raise UsageError("--truth is only used with --loss")
        default = "identity" if mode == "slack" else "zero"
        eta = ETAS[args.loss_eta or default]
    for d in (r.split()[0] for r in args.require or ()):
        if d.lstrip("-").isdigit() and not 0 <= int(d) < model.P:
            raise UsageError(f"--require dimension {d} outside 0..{model.P - 1}")
    if mode == "margin":
        comb = Sum(eta)
    elif mode == "slack":
        comb = Product(eta)
    elif mode == "gate":
        if not args.require:
            raise UsageError("--mode gate needs at least one --require")
        comb = Gate(_gate_predicate(args.require), eta if (args.loss or args.loss_eta) else None)
    else:
        if not args.h_func:
            raise UsageError("--mode general needs --h MODULE:FUNC")
        comb = General(_load_h(args.h_func), monotone=True)
    return model, comb, loss


def _tree_opts(args):
    return {"reduce": not args.no_reduce, "reshape": args.reshape, "root": args.root or 0}


def _emit(sol: Solution, args, out):
    if args.format == "json":
        d = sol.to_dict()
        if not args.diagnostics:
            d.pop("diagnostics", None)
        out.write(json.dumps(d, sort_keys=True) + "\n")
    else:
        out.write(sol.to_text())
        if args.diagnostics:
            out.write(_diagnostics_text(sol.diagnostics))
    return EXIT_OK if sol.feasible else EXIT_INFEASIBLE


def _diagnostics_text(diag) -> str:
    lines = []
    for k in sorted(diag):
        v = diag[k]
        if isinstance(v, dict):
            for edge in sorted(v, key=lambda e: tuple(int(x) for x in e.split("->"))):
                lines.append(f"{k} {edge} {v[edge]}")
        else:
            lines.append(f"{k} {v}")
    return "".join(line + "\n" for line in lines)


# ---- commands

def cmd_solve(args, out):
    model, comb, loss = _problem(args)
    opts = _tree_opts(args)
    if loss is not None and args.mode in (None, tasks.MARGIN, tasks.SLACK):
        sol = tasks.loss_augmented(model.without_statistics(), loss, args.mode or tasks.MARGIN, **opts)
    else:
        sol = tasks.solve(model, comb, **opts)
    return _emit(sol, args, out)


def cmd_oracle(args, out):
    model, comb, _ = _problem(args)
    return _emit(brute_force(model, comb, args.budget), args, out)


def cmd_inspect(args, out):
    model, _ = parse_model(args.model)
    base = build_clique_tree(model)
    stages = [("clique tree", base)]
    stages.append(("after reduce", reduce_neighbors(base)))
    reshaped = reshape_dedup_sepsets(base)
    stages.append(("after reshape", reshaped))
    stages.append(("after reshape and reduce", reduce_neighbors(reshaped)))
    out.write(f"model M {model.M} N {model.N} P {model.P}\n")
    for title, tree in stages:
        out.write(f"== {title}\n{tree.describe()}\n")
    out.write(f"nu bound after reshape {degree_bound(base.width)}\n")
    return EXIT_OK


def cmd_loss_augmented(args, out):
    model, _ = parse_model(args.model)
    positive = _states(args.positive) if args.positive else None
    loss = loss_by_name(args.loss, _states(args.truth), model.cardinalities, positive)
    sol = tasks.loss_augmented(
        model.without_statistics(), loss, args.mode, fast_path=not args.no_fast_path, **_tree_opts(args)
    )
    return _emit(sol, args, out)


def cmd_label_count(args, out):
    model, _ = parse_model(args.model)
    return _emit(tasks.label_count_constrained(model.without_statistics(), args.b, **_tree_opts(args)), args, out)


def _bound(text, default):
    if text is None:
        return default
    v = float(text)
    if math.isnan(v):
        raise UsageError("range bound is NaN")
    return v


def cmd_objective_range(args, out):
    with open(args.chain, encoding="utf-8") as fh:
        spec = json.load(fh)
    try:
        chain = tasks.ChainScore(spec["obs"], spec["unary"], spec["pairwise"])
    except KeyError as exc:
        raise UsageError(f"chain file lacks key {exc}") from None
    if chain.unary.ndim != 2 or chain.pairwise.shape != (chain.N, chain.N):
        raise UsageError("chain file needs unary D x N and pairwise N x N")
    if chain.obs and not all(0 <= o < chain.D for o in chain.obs):
        raise UsageError(f"observations must lie in 0..{chain.D - 1}")
    sol = tasks.objective_range_constrained(
        chain, _bound(args.a, -math.inf), _bound(args.b, math.inf), args.precision, **_tree_opts(args)
    )
    return _emit(sol, args, out)


def cmd_exclude(args, out):
    model, _ = parse_model(args.model)
    patterns = [_states(p) for p in args.pattern]
    return _emit(tasks.exclude_patterns(model.without_statistics(), patterns, **_tree_opts(args)), args, out)


def cmd_kbest(args, out):
    model, _ = parse_model(args.model)
    margins = _states(args.margins) if args.margins else (0,) * (args.K - 1)
    res = tasks.diverse_kbest(model.without_statistics(), args.K, margins, **_tree_opts(args))
    if args.format == "json":
        d = {
            "solutions": [s.to_dict() if args.diagnostics else {k: v for k, v in s.to_dict().items() if k != "diagnostics"}
                          for s in res.solutions],
            "infeasible_round": res.metadata["infeasible_round"],
        }
        out.write(json.dumps(d, sort_keys=True) + "\n")
    else:
        for k, s in enumerate(res.solutions, start=1):
            out.write(f"solution {k}\n{s.to_text()}")
        if res.metadata["infeasible_round"] is not None:
            out.write(f"status infeasible at round {res.metadata['infeasible_round']}\n")
    return EXIT_OK if res.metadata["infeasible_round"] is None else EXIT_INFEASIBLE


def cmd_genbound(args, out):
    model, _ = parse_model(args.model)
    positive = _states(args.positive) if args.positive else None
    sol = tasks.generalization_bound_term(
        model.without_statistics(), args.score_truth, _states(args.truth), positive, **_tree_opts(args)
    )
    return _emit(sol, args, out)


def cmd_bench(args, out):
    ms = bench.parse_range(args.M)
    records = bench.run(args.task, ms, args.N, args.repetitions, args.seed, timing=not args.no_timing)
    out.write(bench.to_csv(records))
    if args.fit:
        sys.stderr.write(f"slope {bench.fit_slope(records):.3f}\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gmap", description="Exact MAP inference for max_y H(F(y), G(y)).")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("solve", help="constrained message passing on a model file")
    p.add_argument("model")
    _add_combinator_flags(p)
    _add_tree_flags(p)
    _add_output_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("oracle", help="brute-force reference with the same flags as solve")
    p.add_argument("model")
    _add_combinator_flags(p)
    _add_tree_flags(p)
    _add_output_flags(p)
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("inspect", help="print the clique tree before and after each transform")
    p.add_argument("model")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("loss-augmented", help="margin or slack scaled loss-augmented inference")
    p.add_argument("model")
    p.add_argument("--loss", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--positive")
    p.add_argument("--mode", choices=(tasks.MARGIN, tasks.SLACK), default=tasks.MARGIN)
    p.add_argument("--no-fast-path", action="store_true", help="skip the folded-factor margin path")
    _add_tree_flags(p)
    _add_output_flags(p)
    p.set_defaults(func=cmd_loss_augmented)

    p = sub.add_parser("label-count", help="MAP with exactly b ones (binary variables)")
    p.add_argument("model")
    p.add_argument("--b", type=int, required=True)
    _add_tree_flags(p)
    _add_output_flags(p)
    p.set_defaults(func=cmd_label_count)

    p = sub.add_parser("objective-range", help="chain MAP with its score restricted to [a, b]")
    p.add_argument("chain", help="JSON file with obs, unary (D x N) and pairwise (N x N)")
    p.add_argument("--a")
    p.add_argument("--b")
    p.add_argument("--precision", type=int, default=1000)
    _add_tree_flags(p)
    _add_output_flags(p)
    p.set_defaults(func=cmd_objective_range)

    p = sub.add_parser("exclude", help="best assignment avoiding the given patterns")
    p.add_argument("model")
    p.add_argument("--pattern", action="append", default=[], required=True)
    _add_tree_flags(p)
    _add_output_flags(p)
    p.set_defaults(func=cmd_exclude)

    p = sub.add_parser("kbest", help="greedy diverse K-best")
    p.add_argument("model")
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--margins", help="K-1 Hamming margins")
    _add_tree_flags(p)
    _add_output_flags(p)
    p.set_defaults(func=cmd_kbest)

    p = sub.add_parser("genbound", help="max_y of the gated F1 term of the generalization bound")
    p.add_argument("model")
    p.add_argument("--score-truth", type=float, required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--positive")
    _add_tree_flags(p)
    _add_output_flags(p)
    p.set_defaults(func=cmd_genbound)

    p = sub.add_parser("bench", help="run-time scaling on synthetic chains, CSV on stdout")
    p.add_argument("task", choices=tuple(bench.TASKS))
    p.add_argument("--M", default="20:200:20", help="lo:hi:step, inclusive")
    p.add_argument("--N", type=int, default=2)
    p.add_argument("--repetitions", "--reps", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fit", action="store_true", help="print the log-log slope to stderr")
    p.add_argument("--no-timing", action="store_true", help="write 0 seconds for byte-identical output")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None, out=None) -> int:
    out = out if out is not None else sys.stdout
    try:
        args = build_parser().parse_args(argv)
        return args.func(args, out)
    except (UsageError, GmapError, ValueError, TypeError, OSError) as exc:
        msg = " ".join(str(exc).split()) or type(exc).__name__
        sys.stderr.write(f"gmap: error: {msg}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
