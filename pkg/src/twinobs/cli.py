"""Command-line interface: ``twinobs {osd,twins,bell,info,separable}``.

Reports are JSON on stdout, diagnostics go to stderr.  Exit codes: 0 ok,
1 invalid input, 2 numerical failure (including a state file that fails
the positivity/trace check), 3 usage error.
"""
from __future__ import annotations

import argparse
import json
import sys
from collections import Counter

import numpy as np

from . import bell as bellmod
from .errors import InputError, NotAStateError, NotATwinError, NumericalError, TwinObsError
from .fileio import (
    decomposition_from_json,
    digest,
    operator_from_json,
    read_json,
    state_from_json,
    to_jsonable,
)
from .info import joint_distribution, lindblad_check, perfect_correlation, quantum_mutual_info, vn_entropy
from .linalg import partial_trace, rank_decision
from .schmidt import hermitian_osd, hs_norm, osd, realign_matrix
from .twins import biortho_groups, classify_twin, twin_space, verify_twin

DEFAULT_TOL = 1e-9


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(3)


def _floats(text: str, n: int, name: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError:
        raise InputError(f"--{name}: expected {n} comma-separated numbers, got {text!r}") from None
    if len(vals) != n:
        raise InputError(f"--{name}: expected {n} numbers, got {len(vals)}")
    return vals


def _report(args, inputs: dict, results: dict, decisions: list | None = None) -> dict:
    return {
        "command": args.argv,
        "inputs": inputs,
        "tolerance": args.tol,
        "results": results,
        "rank_decisions": decisions or [],
    }


def _decision(what: str, d) -> dict:
    return {"what": what, **d.as_dict()}


def _load_state(path, tol):
    data, raw = read_json(path)
    return state_from_json(data, tol=tol), digest(raw)


def _strength(state, pair, tol=1e-8):
    try:
        st = classify_twin(state, pair, tol)
    except NotATwinError as exc:
        return {"kind": None, "error": str(exc)}
    return {
        "kind": st.kind.value,
        "per_eigenvalue": [{"value": e.value, "strong": e.strong, "commutator": e.commutator}
                           for e in st.per_eigenvalue],
        "global_commutators": list(st.global_commutators),
    }


def _range_decisions(state, tol):
    out = []
    for label, which in (("rank of rho_1", 2), ("rank of rho_2", 1)):
        ev = np.clip(np.linalg.eigvalsh(partial_trace(state, which))[::-1], 0.0, None)
        out.append(_decision(label, rank_decision(ev, tol)))
    return out


# -- commands -------------------------------------------------------------------

def cmd_osd(args) -> dict:
    state, dg = _load_state(args.input, args.state_tol)
    dec = (hermitian_osd if args.hermitian else osd)(state, args.tol)
    sv = np.linalg.svd(realign_matrix(state.rho / hs_norm(state.rho), state.d1, state.d2), compute_uv=False)
    results = {
        "hermitian": dec.hermitian,
        "d1": state.d1,
        "d2": state.d2,
        "hs_norm": dec.norm,
        "terms": [{"coeff": t.coeff, "opA": t.op_a, "opB": t.op_b} for t in dec.terms],
        "coefficients": dec.coefficients,
        "reconstruction_residual": dec.residual(state.rho),
    }
    return _report(args, {"input": dg}, results, [_decision("operator Schmidt rank", rank_decision(sv, args.tol))])


def cmd_twins(args) -> dict:
    state, dg = _load_state(args.input, args.state_tol)
    tb = twin_space(state, args.tol)
    pairs = []
    for p in tb.pairs:
        pairs.append({
            "a1": p.a1, "a2": p.a2, "residual": p.residual,
            "commutator_rho1": p.comm1, "commutator_rho2": p.comm2,
            "strength": _strength(state, p),
        })
    results = {"dim": tb.dim, "nontrivial": tb.nontrivial, "gap": tb.gap, "pairs": pairs}
    decisions = [_decision("twin-space kernel", tb.decision)] + _range_decisions(state, args.tol)
    return _report(args, {"input": dg}, results, decisions)


def _mixture(args) -> bellmod.BellMixture:
    if args.weights is not None and args.t is not None:
        raise _UsageError("--weights and --t are mutually exclusive")
    try:
        if args.weights is not None:
            return bellmod.BellMixture.from_weights(_floats(args.weights, 4, "weights"))
        if args.t is not None:
            return bellmod.BellMixture.from_t(_floats(args.t, 3, "t"))
    except NotAStateError as exc:
        raise InputError(str(exc)) from exc
    raise _UsageError("one of --weights or --t is required")


def _class_dict(c: bellmod.MixtureClass) -> dict:
    return {
        "kind": c.kind.value,
        "axis": c.axis,
        "bell": c.bell,
        "terms": None if c.terms is None else [{"weight": w, "bell": k} for w, k in c.terms],
        "margins": list(c.margins),
    }


def cmd_bell_classify(args) -> dict:
    m = _mixture(args)
    c = bellmod.classify_mixture(m, args.unit_tol)
    results = {"weights": list(m.weights), "t": list(m.t), "rank": m.rank, "class": _class_dict(c)}
    return _report(args, {}, results)


def cmd_bell_twins(args) -> dict:
    m = _mixture(args)
    c = bellmod.classify_mixture(m, args.unit_tol)
    state = m.state()
    fam = bellmod.mixture_twins(c)
    results = {"weights": list(m.weights), "t": list(m.t), "class": _class_dict(c)}
    if isinstance(fam, bellmod.TwinFamily):
        a1, a2 = fam.pair(0.0, 1.0)
        results["family"] = {
            "axis": fam.axis,
            "sign": fam.sign,
            "form": f"A1 = a I + b sigma_{fam.axis}, A2 = a I {'+' if fam.sign > 0 else '-'} b sigma_{fam.axis}",
        }
    elif isinstance(fam, bellmod.PureBellTwins):
        a1, a2 = fam.pair(0.0, (0.0, 0.0, 1.0))
        results["family"] = {
            "bell": fam.bell,
            "signs": bellmod.BELL_T[fam.bell],
            "form": "all commuting A1 admit twins: A1 = a I + sum b_i sigma_i, A2 = a I + sum s_i b_i sigma_i",
        }
    else:
        a1 = a2 = None
        results["family"] = None
    if a1 is not None:
        p = verify_twin(state, a1, a2)
        results["sample_pair"] = {"a1": a1, "a2": a2, "residual": p.residual, "strength": _strength(state, p)}
    tb = twin_space(state, args.tol)
    results["twin_space_dim"] = tb.dim
    return _report(args, {}, results, [_decision("twin-space kernel", tb.decision)])


def cmd_bell_schmidt(args) -> dict:
    m = _mixture(args)
    closed = bellmod.bell_diagonal_schmidt(m)
    generic = hermitian_osd(m.state(), args.tol)
    a, b = np.sort(closed.coefficients), np.sort(generic.coefficients)
    results = {
        "t": list(m.t),
        "terms": [{"coeff": t.coeff, "opA": t.op_a, "opB": t.op_b} for t in closed.terms],
        "generic_coefficients": generic.coefficients,
        "max_coefficient_difference": float(np.abs(a - b).max()) if a.size == b.size else None,
    }
    return _report(args, {}, results)


def cmd_bell_sweep(args) -> dict:
    if args.grid < 1:
        raise InputError("--grid must be positive")
    points = bellmod.sweep(args.grid, args.tol, args.jobs)
    table = {}
    for rank in (1, 2, 3, 4):
        sel = [p for p in points if p.rank == rank]
        if not sel:
            continue
        table[str(rank)] = {
            "points": len(sel),
            "expected_dim": bellmod.EXPECTED_TWIN_DIM[rank],
            "dims": {str(k): v for k, v in sorted(Counter(p.dim for p in sel).items())},
            "min_gap": min(p.decision.gap for p in sel),
        }
    results = {
        "grid": args.grid,
        "n_points": len(points),
        "all_match": all(p.ok for p in points),
        "by_rank": table,
        "points": [{"weights": list(p.weights), "rank": p.rank, "dim": p.dim, "gap": p.decision.gap}
                   for p in points],
    }
    worst = min(points, key=lambda p: p.decision.gap)
    return _report(args, {}, results, [_decision(f"smallest sweep gap (grid point {worst.index})", worst.decision)])


def cmd_info(args) -> dict:
    state, dg = _load_state(args.input, args.state_tol)
    inputs = {"input": dg}
    ops = {}
    for name in ("a", "b"):
        data, raw = read_json(getattr(args, name))
        ops[name] = operator_from_json(data)
        inputs[name] = digest(raw)
    a, b = ops["a"], ops["b"]
    if a.shape != (state.d1, state.d1) or b.shape != (state.d2, state.d2):
        raise InputError(f"operators must be {state.d1}x{state.d1} and {state.d2}x{state.d2}")
    j = joint_distribution(state, a, b)
    lc = lindblad_check(state, a, b)
    pair = verify_twin(state, a, b)
    results = {
        "S1": vn_entropy(partial_trace(state, 2)),
        "S2": vn_entropy(partial_trace(state, 1)),
        "S12": vn_entropy(state.rho),
        "C": quantum_mutual_info(state),
        "values_a": j.values_a,
        "values_b": j.values_b,
        "joint": j.p,
        "H": lc.H,
        "lindblad_ok": lc.ok,
        "note": "H is for the given observable pair only and lower-bounds the supremum over all pairs",
        "twin_residual": pair.residual,
        "perfect_correlation": None,
    }
    if pair.is_twin():
        pc = perfect_correlation(state, pair)
        results["perfect_correlation"] = {"f": [[k, v] for k, v in pc.f.items()], "H": pc.H}
    return _report(args, inputs, results)


def cmd_separable(args) -> dict:
    data, raw = read_json(args.input)
    try:
        dec = decomposition_from_json(data, tol=args.state_tol)
    except NotAStateError as exc:
        raise InputError(str(exc)) from exc
    groups = biortho_groups(dec, args.tol)
    state = dec.state()
    pairs = [{"component": comp, "P1": p.a1, "P2": p.a2, "residual": p.residual, "strength": _strength(state, p)}
             for comp, p in zip(groups.components, groups.twins)]
    results = {
        "n_terms": len(dec),
        "components": groups.components,
        "nontrivial_twins": groups.nontrivial,
        "twin_projectors": pairs,
    }
    return _report(args, {"input": digest(raw)}, results)


# -- wiring -------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="twinobs", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, state=True):
        p.add_argument("--tol", type=float, default=DEFAULT_TOL, help="relative rank tolerance (default 1e-9)")
        if state:
            p.add_argument("--state-tol", type=float, default=1e-8,
                           help="positivity/trace tolerance for input states (default 1e-8)")

    p = sub.add_parser("osd", help="operator Schmidt decomposition of a state file")
    p.add_argument("--input", required=True)
    p.add_argument("--hermitian", action="store_true", help="Hermitian factor operators")
    common(p)
    p.set_defaults(func=cmd_osd)

    p = sub.add_parser("twins", help="twin-space of a state file")
    p.add_argument("--input", required=True)
    common(p)
    p.set_defaults(func=cmd_twins)

    pb = sub.add_parser("bell", help="Bell-diagonal two-qubit states")
    # accepted before or after the sub-subcommand
    pb.add_argument("--weights", help="w1,w2,w3,w0 (use --weights=... for negative values)")
    pb.add_argument("--t", help="t1,t2,t3 (use --t=-1,... for negative values)")
    bsub = pb.add_subparsers(dest="bell_command", required=True)
    for name, func in (("classify", cmd_bell_classify), ("twins", cmd_bell_twins), ("schmidt", cmd_bell_schmidt)):
        q = bsub.add_parser(name)
        q.add_argument("--weights", default=argparse.SUPPRESS, help="w1,w2,w3,w0")
        q.add_argument("--t", default=argparse.SUPPRESS, help="t1,t2,t3")
        q.add_argument("--unit-tol", type=float, default=bellmod.UNIT_TOL, help="|t_i| = 1 decision tolerance")
        common(q, state=False)
        q.set_defaults(func=func)
    q = bsub.add_parser("sweep", help="twin-space dimension over a tetrahedron grid")
    q.add_argument("--grid", type=int, required=True, help="grid subdivisions per edge")
    q.add_argument("--jobs", type=int, default=1)
    common(q, state=False)
    q.set_defaults(func=cmd_bell_sweep)

    p = sub.add_parser("info", help="entropic correlations and the Lindblad bound")
    p.add_argument("--input", required=True)
    p.add_argument("--a", required=True, help="factor-1 operator file")
    p.add_argument("--b", required=True, help="factor-2 operator file")
    common(p)
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("separable", help="biorthogonal grouping of a separable decomposition")
    p.add_argument("--input", required=True)
    common(p)
    p.set_defaults(func=cmd_separable)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 3
    args.argv = argv
    try:
        report = args.func(args)
    except _UsageError as exc:
        print(f"twinobs: error: {exc}", file=sys.stderr)
        return 3
    except InputError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 1
    except NotAStateError as exc:
        print(f"not a state: {exc}", file=sys.stderr)
        if exc.eigenvalues is not None:
            print("eigenvalues: " + " ".join(f"{x:.6e}" for x in np.real(exc.eigenvalues)), file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except TwinObsError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 1
    sys.stdout.write(json.dumps(to_jsonable(report), indent=2) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
