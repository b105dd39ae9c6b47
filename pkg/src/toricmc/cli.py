"""Command-line front end.

Every subcommand reads model, graph, matrix or parameter files, prints one
canonical JSON object and exits with

    0  success
    1  the mathematical answer is negative (not reversible, not a chain, ...)
    2  bad input
    3  enumeration budget exceeded
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import amodel, design, lattice, markov, reversible
from . import io as tio
from .errors import EnumerationBudgetExceeded, InputError, NegativeResult

EXIT_OK, EXIT_NEGATIVE, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3


class Result:
    """JSON payload plus the exit status it implies."""

    def __init__(self, payload: dict, negative: bool = False):
        self.payload = payload
        self.negative = negative


COMMANDS: dict[str, Callable[[argparse.Namespace], Result]] = {}


def command(name: str):
    def register(fn):
        COMMANDS[name] = fn
        return fn

    return register


def _model(args, attr: str = "model") -> amodel.AModel:
    return tio.load_model(getattr(args, attr), args.format)


def _budget(args) -> int | None:
    return args.max_candidates


# ---------------------------------------------------------------------------
# A-models


@command("kernel")
def cmd_kernel(args) -> Result:
    m = _model(args)
    K = lattice.integer_kernel_basis(m.A)
    return Result({"kernel": K.vectors, "rank": lattice.rational_rank(m.A), "n_points": m.n_points})


@command("hilbert")
def cmd_hilbert(args) -> Result:
    m = _model(args)
    hb = lattice.hilbert_basis_of_span(m.A, _budget(args))
    return Result({"hilbert": hb.vectors, "size": len(hb)})


@command("invariants")
def cmd_invariants(args) -> Result:
    m = _model(args)
    bs = amodel.invariants_from_kernel(m)
    return Result(
        {"binomials": [{"plus": b.plus, "minus": b.minus, "text": str(b), "homogeneous": b.is_homogeneous} for b in bs]}
    )


@command("closure")
def cmd_closure(args) -> Result:
    return Result(tio.model_to_obj(amodel.closure_model(_model(args), _budget(args))))


@command("face")
def cmd_face(args) -> Result:
    m = _model(args)
    zero = tio.parse_list(args.zero_rows, int)
    support, sub = amodel.face_submodel(m, zero)
    return Result(
        {
            "support": sorted(support),
            "support_labels": [m.col_labels[x] for x in sorted(support)],
            "model": tio.model_to_obj(sub),
            "rank": lattice.rational_rank(sub.A),
        }
    )


@command("confounded")
def cmd_confounded(args) -> Result:
    m = _model(args)
    s, t = tio.parse_list(args.s), tio.parse_list(args.t)
    c = amodel.confounded(m, s, t, args.tol)
    return Result({"confounded": c}, negative=not c)


@command("equiv")
def cmd_equiv(args) -> Result:
    a, b = _model(args, "model"), _model(args, "other")
    eq = amodel.models_equivalent(a, b)
    return Result({"equivalent": eq}, negative=not eq)


@command("moments")
def cmd_moments(args) -> Result:
    m = _model(args)
    t = tio.parse_list(args.t)
    alpha = tio.parse_list(args.alpha, int)
    return Result(
        {"alpha": alpha, "moment": design.moment(m, t, alpha), "direct": design.moment_direct(m, t, alpha)}
    )


def _var_order(args, d: design.Design) -> list[int] | None:
    if not args.order:
        return None
    names = [s.strip() for s in args.order.split(",")]
    try:
        return [d.var_names.index(n) if n in d.var_names else int(n) for n in names]
    except ValueError:
        raise InputError(f"unknown variable in order: {args.order}") from None


@command("mbasis")
def cmd_mbasis(args) -> Result:
    d = design.design_of(_model(args))
    basis = design.monomial_basis(d, _var_order(args, d))
    names = [design.Poly.monomial(b).format(d.var_names) for b in basis]
    return Result({"variables": d.var_names, "basis": basis, "monomials": names})


@command("indicator")
def cmd_indicator(args) -> Result:
    m = _model(args)
    d = design.design_of(m)
    if args.point in m.col_labels:
        a = list(d.points[m.col_labels.index(args.point)])
    else:
        a = tio.parse_list(args.point, int)
    f = design.indicator_poly(d, a, _var_order(args, d))
    terms = sorted(f.terms.items())
    return Result(
        {
            "point": a,
            "variables": d.var_names,
            "terms": [{"exponent": e, "coefficient": c} for e, c in terms],
            "text": f.format(d.var_names),
            "values": [f(p) for p in d.points],
        }
    )


# ---------------------------------------------------------------------------
# toric Markov chains


def _graph_and_params(args) -> tuple[markov.TransitionGraph, markov.TmcParam]:
    g = tio.load_graph(args.graph)
    obj = tio.read_json(args.params) if args.params else {}
    return g, tio.tmc_param_from_obj(g, obj)


def _labelled(graph, M) -> dict:
    return {tio.arc_key(graph.vertices[i], graph.vertices[j]): float(M[i, j]) for i, j in graph.transitions}


@command("tmc-z")
def cmd_tmc_z(args) -> Result:
    g, t = _graph_and_params(args)
    return Result({"n": args.n, "Z": float(markov.partition_function(g, t, args.n))})


@command("tmc-expected")
def cmd_tmc_expected(args) -> Result:
    g, t = _graph_and_params(args)
    E = markov.expected_counts(g, t, args.n)
    return Result({"n": args.n, "expected": _labelled(g, E)})


@command("tmc-homog")
def cmd_tmc_homog(args) -> Result:
    g, t = _graph_and_params(args)
    h = markov.homogeneity_check(g, t, args.tol)
    S = {str(v): float(x) for v, x in zip(g.vertices, t.row_sums)}
    payload: dict[str, Any] = {"is_mc": h.is_mc, "row_sums": S}
    if h.is_mc:
        payload["S"] = h.S
        payload["P"] = _labelled(g, markov.normalize_to_mc(g, t))
    else:
        payload["witness"] = list(h.witness)
    return Result(payload, negative=not h.is_mc)


@command("realizable")
def cmd_realizable(args) -> Result:
    g = tio.load_graph(args.graph)
    N = tio.count_matrix(g, args.counts, args.format)
    r = markov.is_realizable(N, g)
    payload = {"kind": r.kind, "realizable": r.realizable}
    if r.kind == "open":
        payload.update(start=r.start, end=r.end)
    if r.reason:
        payload["reason"] = r.reason
    return Result(payload, negative=not r.realizable)


# ---------------------------------------------------------------------------
# cycles and reversibility


@command("cycles")
def cmd_cycles(args) -> Result:
    g = tio.load_graph(args.graph)
    cycles = reversible.enumerate_cycles(g, _budget(args))
    census = reversible.cycle_census(g, _budget(args))
    by_len: dict[str, list] = {}
    for c in cycles:
        by_len.setdefault(str(len(c)), []).append(list(c.vertices))
    return Result(
        {
            "census": {
                "by_length": {str(k): v for k, v in census.by_length.items()},
                "oriented": census.oriented,
                "unoriented": census.unoriented,
                "nonzero_vectors": census.vectors,
            },
            "cycles": by_len,
        }
    )


@command("decompose")
def cmd_decompose(args) -> Result:
    g = tio.load_graph(args.graph)
    omega = tio.parse_trajectory(args.trajectory, g)
    rest, cycles = reversible.decompose_trajectory(g, omega)
    return Result({"elementary": list(rest), "cycles": [list(c.vertices) for c in cycles]})


def _matrix(args, attr: str = "matrix", key: str = "P", exact: bool = False):
    return tio.load_matrix(getattr(args, attr), args.format, key, exact)


@command("kcheck")
def cmd_kcheck(args) -> Result:
    vs, P = _matrix(args)
    k = reversible.kolmogorov_check(P, args.tol, _budget(args))
    payload: dict[str, Any] = {"reversible": k.reversible}
    if not k.reversible:
        payload["witness"] = [vs[i] for i in k.witness]
        payload["log_ratio"] = k.log_ratio
    return Result(payload, negative=not k.reversible)


@command("dbsolve")
def cmd_dbsolve(args) -> Result:
    vs, P = _matrix(args)
    db = reversible.detailed_balance_solve(P, args.tol)
    if db.reversible:
        return Result({"reversible": True, "kappa": {str(v): float(x) for v, x in zip(vs, db.kappa)}})
    v, w = db.violating_edge
    return Result({"reversible": False, "kappa": None, "violating_edge": [vs[v], vs[w]]}, negative=True)


@command("rev-build")
def cmd_rev_build(args) -> Result:
    g, rp = tio.rev_param_from_obj(tio.read_json(args.params))
    if args.graph:
        g = tio.load_graph(args.graph)
    P, kappa = reversible.reversible_from_params(g, rp, args.tol)
    return Result({"vertices": list(g.vertices), "P": P, "kappa": kappa})


@command("rev-params")
def cmd_rev_params(args) -> Result:
    vs, P = _matrix(args)
    loops = [vs[i] for i in range(len(vs)) if P[i, i] > 0]
    g = markov.TransitionGraph.from_support(P, vs)
    rp = reversible.params_from_reversible(g, P, tol=args.tol)
    return Result(tio.rev_param_to_obj(vs, rp, loops))


@command("metropolis")
def cmd_metropolis(args) -> Result:
    vs, Q = _matrix(args, key="Q", exact=True)
    P = reversible.metropolis_reversible(Q, args.combiner)
    margins = [sum(row, start=type(row[0])(0)) for row in P]
    return Result({"vertices": vs, "combiner": args.combiner, "P": P, "margins": margins})


@command("divergence")
def cmd_divergence(args) -> Result:
    vs, P = _matrix(args)
    if args.pi:
        pi = np.array(tio.parse_list(args.pi))
    else:
        pi = markov.stationary_distribution(P)
    return Result({"n": args.n, "divergence": reversible.reversal_divergence(P, pi, args.n)})


# ---------------------------------------------------------------------------
# argument parsing


def _env_budget() -> int | None:
    raw = os.environ.get("TORICMC_MAX_CANDIDATES")
    return int(raw) if raw else None


def _common_flags(suppress) -> argparse.ArgumentParser:
    def d(value):
        return suppress if suppress is not None else value

    common = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    common.add_argument("--tol", type=float, default=d(1e-9), help="numerical tolerance (default 1e-9)")
    common.add_argument(
        "--max-candidates",
        type=int,
        default=d(None),
        help="enumeration budget; defaults to $TORICMC_MAX_CANDIDATES or 10^6",
    )
    common.add_argument("--format", choices=("json", "csv"), default=d("json"), help="matrix input format")
    common.add_argument("--output", "-o", default=d(None), help="write JSON here instead of stdout")
    common.add_argument("--table", action="store_true", default=d(False), help="also print an aligned text table to stderr")
    return common


def build_parser() -> argparse.ArgumentParser:
    # global flags are accepted before or after the subcommand; the copy on
    # the subparsers must not overwrite values given before it
    common = _common_flags(argparse.SUPPRESS)
    top = _common_flags(None)

    p = argparse.ArgumentParser(
        prog="toricmc", description="Toric models and Markov chains.", parents=[top], allow_abbrev=False
    )
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, help_, *positionals):
        sp = sub.add_parser(name, help=help_, parents=[common], allow_abbrev=False)
        for pos in positionals:
            sp.add_argument(pos)
        return sp

    add("kernel", "saturated integer kernel of the model matrix", "model")
    add("hilbert", "Hilbert basis of the nonnegative row-span monoid", "model")
    add("invariants", "binomial invariants from the kernel basis", "model")
    add("closure", "closure (Hilbert basis) model", "model")
    add("face", "face submodel with some closure parameters set to zero", "model").add_argument(
        "--zero-rows", required=True, help="row indices, e.g. 1,3"
    )
    sp = add("confounded", "do two parameter points give the same density", "model")
    sp.add_argument("--s", required=True)
    sp.add_argument("--t", required=True)
    add("equiv", "do two models have equal row spans", "model", "other")
    sp = add("moments", "moment E[X^alpha] via Euler operators", "model")
    sp.add_argument("--t", required=True)
    sp.add_argument("--alpha", required=True)
    add("mbasis", "monomial basis of the design", "model").add_argument("--order", help="variable order, highest first")
    sp = add("indicator", "indicator polynomial of a design point", "model")
    sp.add_argument("--point", required=True, help="column label or coordinates, e.g. --point=-++ or --point 1,0,0,1,1")
    sp.add_argument("--order", help="variable order, highest first")

    for name, help_ in (
        ("tmc-z", "partition function of a toric Markov chain"),
        ("tmc-expected", "expected transition counts"),
        ("tmc-homog", "is the toric chain a Markov chain"),
    ):
        sp = add(name, help_, "graph")
        sp.add_argument("--params", help="flat JSON map of weights (missing keys are 1)")
        if name != "tmc-homog":
            sp.add_argument("-n", type=int, required=True, help="number of transitions")
    add("realizable", "is a count matrix the count of some trajectory", "graph").add_argument(
        "--counts", required=True
    )
    add("cycles", "elementary cycles and census", "graph")
    add("decompose", "split a trajectory into a path and cycles", "graph").add_argument(
        "--trajectory", required=True, help="states, e.g. a,b,c,a"
    )
    add("kcheck", "Kolmogorov cycle criterion", "matrix")
    add("dbsolve", "solve detailed balance", "matrix")
    add("rev-build", "reversible kernel from parameters", "params").add_argument("--graph")
    add("rev-params", "parameters of a reversible kernel", "matrix")
    add("metropolis", "reversible joint from a joint Q", "matrix").add_argument(
        "--combiner", choices=sorted(reversible.COMBINERS), default="min"
    )
    sp = add("divergence", "KL divergence from the time reversal", "matrix")
    sp.add_argument("-n", type=int, required=True)
    sp.add_argument("--pi", help="stationary distribution (default: computed)")
    return p


def _table(payload: dict) -> str:
    rows = [(str(k), tio.dumps(v).strip().replace("\n", " ")) for k, v in sorted(payload.items())]
    width = max((len(k) for k, _ in rows), default=0)
    return "\n".join(f"{k.ljust(width)}  {v}" for k, v in rows) + "\n"


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.max_candidates is None:
        try:
            args.max_candidates = _env_budget()
        except ValueError:
            print("error: TORICMC_MAX_CANDIDATES must be an integer", file=sys.stderr)
            return EXIT_INPUT
    try:
        result = COMMANDS[args.command](args)
    except EnumerationBudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except NegativeResult as exc:
        print(f"negative: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE
    except (InputError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    text = tio.dumps(result.payload)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    if args.table:
        sys.stderr.write(_table(result.payload))
    return EXIT_NEGATIVE if result.negative else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
