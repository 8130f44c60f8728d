"""Command line front end.

Exit codes: 0 success, 1 no finding (no bifurcation detected, or a check
came out negative), 2 input or domain error, 3 resource guard. Diagnostics go
to stderr; stdout and ``--out`` files carry machine output only.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

from . import chain, constraints, flipgroup, invariant, simulate
from .core import MapDistribution, format_rational, parse_rational, validate_distribution
from .errors import AmbiguityError, InputError, NPointError, ResourceError

THREADS_ENV = "NPOINT_FLOWS_THREADS"

EXIT_OK, EXIT_NONE, EXIT_INPUT, EXIT_RESOURCE = 0, 1, 2, 3


def _tuple(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise InputError(f"expected a comma-separated list of integers, got {text!r}") from None


def _load_dist(path: str) -> MapDistribution:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    return validate_distribution(MapDistribution.from_json(text))


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _emit(args, text: str) -> None:
    if getattr(args, "out", None):
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _measure_dict(v: invariant.InvariantMeasure) -> dict:
    return {
        "level": v.n,
        "support": [list(t) for t in v.tuples()],
        "mass": [format_rational(v.masses[i]) for i in v.support],
    }


# -- subcommands --------------------------------------------------------------

def cmd_lift(args) -> int:
    dist = _load_dist(args.dist)
    A = chain.lift_transition_matrix(dist, args.level, lazy=args.lazy)
    _emit(args, A.to_text())
    return EXIT_OK


def cmd_detect(args) -> int:
    a, b = _load_dist(args.dist_a), _load_dist(args.dist_b)
    report = invariant.detect_bifurcation_level(a, b, _tuple(args.seed), r=args.r, max_workers=_threads())
    _emit(args, report.to_json())
    return EXIT_OK if report.detected_level is not None else EXIT_NONE


def cmd_dof(args) -> int:
    table = constraints.dof_table(args.m)
    out: dict = {"m": args.m, "table": {str(n): table.row(n) for n in range(args.m + 1)}}
    if args.k is not None:
        out["k"] = args.k
        out["restrictions"] = table.R[args.m, args.k]
        out["remaining"] = table.remaining(args.k)
    if args.dist:
        if args.k is None:
            raise InputError("--k is required together with a distribution file")
        dist = _load_dist(args.dist)
        if dist.m != args.m:
            raise InputError(f"distribution has m={dist.m}, expected {args.m}")
        sys_ = constraints.build_constraints(args.m, args.k, constraints.characteristics_of(dist),
                                             mode=args.mode, allow_large=args.allow_large)
        rank = constraints.exact_rank(sys_)
        out["system"] = {"mode": sys_.mode, "rows": sys_.n_rows, "unknowns": sys_.n_unknowns,
                         "rank": rank, "nullspace_dim": sys_.n_unknowns - rank,
                         "feasible": sys_.is_feasible()}
        if args.basis:
            basis = constraints.nullspace_basis(sys_)
            out["system"]["basis"] = constraints.format_nullspace(sys_, basis).splitlines()
    if args.format == "json":
        _emit(args, _json(out))
    else:
        lines = [f"# m={args.m}"]
        for n in range(args.m + 1):
            lines.append(f"n={n}\t" + "\t".join(str(x) for x in table.row(n)))
        for key in ("k", "restrictions", "remaining"):
            if key in out:
                lines.append(f"{key}={out[key]}")
        for key, val in out.get("system", {}).items():
            if key == "basis":
                lines.extend(f"basis\t{v}" for v in val)
            else:
                lines.append(f"{key}={val}")
        _emit(args, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_example(args) -> int:
    dist = flipgroup.example_distribution(args.m, parse_rational(args.epsilon))
    _emit(args, dist.to_json())
    return EXIT_OK


def cmd_simulate(args) -> int:
    dist = _load_dist(args.dist)
    if args.rate <= 0 or args.horizon < 0:
        raise InputError("rate must be positive and horizon nonnegative")
    sample = simulate.simulate_flow(dist, args.rate, args.horizon, args.prng_seed, embed=args.embed)
    if args.visited:
        start = _tuple(args.visited)
        seen = sorted(sample.visited(start))
        _emit(args, _json({"start": list(start), "jumps": len(sample.maps),
                           "visited": [list(t) for t in seen], "count": len(seen)}))
    else:
        _emit(args, sample.to_jsonl())
    return EXIT_OK


def cmd_estimate(args) -> int:
    dist = _load_dist(args.dist)
    seed_tuple = _tuple(args.seed_tuple) if args.seed_tuple else None
    est = simulate.empirical_transition_estimate(dist, args.level, args.steps, args.prng_seed,
                                                 seed_tuple=seed_tuple)
    _emit(args, est.to_text(args.steps, args.prng_seed))
    return EXIT_OK


def cmd_invariant(args) -> int:
    dist = _load_dist(args.dist)
    v = invariant.seeded_invariant_measure(dist, _tuple(args.seed))
    cascade = invariant.projection_cascade(v, args.r)
    _emit(args, _json({"seed": list(_tuple(args.seed)), "cascade": [_measure_dict(x) for x in cascade]}))
    return EXIT_OK


def cmd_birkhoff(args) -> int:
    try:
        data = json.loads(Path(args.matrix).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read matrix file {args.matrix}: {exc}") from None
    if isinstance(data, dict) and "atoms" in data:
        dist = validate_distribution(MapDistribution.from_dict(data))
        A = chain.lift_transition_matrix(dist, 1)
        B = [[A[i, j] for j in range(dist.m)] for i in range(dist.m)]
    elif isinstance(data, dict) and "matrix" in data:
        B = [[parse_rational(x) for x in row] for row in data["matrix"]]
    else:
        raise InputError("expected a JSON object with 'matrix' or a distribution document")
    parts = constraints.birkhoff_decompose(B)
    _emit(args, _json({"atoms": [{"map": list(f.images), "weight": format_rational(w)} for f, w in parts]}))
    return EXIT_OK


def cmd_verify(args) -> int:
    what = args.check
    if what == "consistency":
        if args.matrix:
            A = chain.TransitionMatrix.from_text(Path(args.matrix).read_text(encoding="utf-8"))
            lower = None
            if args.lower:
                lower = chain.TransitionMatrix.from_text(Path(args.lower).read_text(encoding="utf-8"))
            rep = chain.check_consistency(A, lower=lower)
        else:
            rep = chain.check_consistency(_load_dist(args.dist), args.level)
        out, ok = rep.to_dict(), rep.passed
    elif what == "invariance":
        dist = _load_dist(args.dist)
        seed = _tuple(args.seed)
        mu = invariant.seeded_invariant_measure(dist, seed)
        results = {str(r): invariant.check_projection_invariance(mu, dist, r) for r in range(1, len(seed) + 1)}
        ok = all(results.values())
        out = {"seed": list(seed), "by_coordinate": results, "passed": ok}
    elif what == "example":
        grid = [parse_rational(x) for x in args.grid.split(",")]
        seeds = [_tuple(s) for s in args.detect_seeds.split(";")] if args.detect_seeds else None
        rep = flipgroup.verify_example(grid, m=args.m, detection_seeds=seeds)
        out, ok = rep.to_dict(), rep.passed
    elif what == "basis-m3":
        rep = constraints.verify_reference_basis_m3()
        out = rep.to_dict()
        ok = rep.nullspace_dim == 8 and rep.first_sum_zero and rep.any_five_independent
    elif what == "complementarity":
        rep = constraints.verify_complementarity(_load_dist(args.dist), _tuple(args.u), _tuple(args.v))
        out, ok = rep.to_dict(), rep.passed
    elif what == "bistochastic":
        rep = constraints.onepoint_bistochastic_check(_load_dist(args.dist))
        out, ok = rep.to_dict(), rep.passed
    else:  # pragma: no cover - argparse restricts choices
        raise InputError(f"unknown check {what!r}")
    _emit(args, _json(out))
    return EXIT_OK if ok else EXIT_NONE


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="npoint-flows", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("lift", help="n-point transition matrix of a distribution")
    s.add_argument("dist")
    s.add_argument("--level", "-n", type=int, required=True)
    s.add_argument("--lazy", action="store_true", help="skip the size guard, build rows one at a time")
    s.add_argument("--out")
    s.set_defaults(func=cmd_lift)

    s = sub.add_parser("detect", help="level of an n-point bifurcation between two flows")
    s.add_argument("dist_a")
    s.add_argument("dist_b")
    s.add_argument("--seed", required=True, help="seed tuple, e.g. 1,2,3,4,5,6")
    s.add_argument("--r", type=int, default=1, help="coordinate deleted at each projection step")
    s.add_argument("--out")
    s.set_defaults(func=cmd_detect)

    s = sub.add_parser("dof", help="degrees-of-freedom table, ranks and null spaces")
    s.add_argument("dist", nargs="?")
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--k", type=int)
    s.add_argument("--mode", choices=[constraints.ALL_MAPS, constraints.PERMUTATIONS], default=constraints.ALL_MAPS)
    s.add_argument("--basis", action="store_true")
    s.add_argument("--allow-large", action="store_true")
    s.add_argument("--format", choices=["text", "json"], default="text")
    s.add_argument("--out")
    s.set_defaults(func=cmd_dof)

    s = sub.add_parser("example", help="flip-group distribution for given m and epsilon")
    s.add_argument("--m", type=int, default=6)
    s.add_argument("--epsilon", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_example)

    s = sub.add_parser("simulate", help="Poisson-driven trajectory of the flow")
    s.add_argument("dist")
    s.add_argument("--rate", type=float, default=1.0)
    s.add_argument("--horizon", type=float, required=True)
    s.add_argument("--prng-seed", type=int, default=0)
    s.add_argument("--embed", action="store_true", help="attach the linear embedding of each map")
    s.add_argument("--visited", help="report the set of tuples visited from this start instead")
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("estimate", help="Monte Carlo estimate of n-point transition rows")
    s.add_argument("dist")
    s.add_argument("--level", "-n", type=int, required=True)
    s.add_argument("--steps", type=int, default=10000)
    s.add_argument("--prng-seed", type=int, default=0)
    s.add_argument("--seed-tuple")
    s.add_argument("--out")
    s.set_defaults(func=cmd_estimate)

    s = sub.add_parser("invariant", help="seeded invariant measure and its projection cascade")
    s.add_argument("dist")
    s.add_argument("--seed", required=True)
    s.add_argument("--r", type=int, default=1)
    s.add_argument("--out")
    s.set_defaults(func=cmd_invariant)

    s = sub.add_parser("birkhoff", help="Birkhoff decomposition of a doubly stochastic matrix")
    s.add_argument("matrix", help="JSON {'matrix': [[p/q,...],...]} or a distribution file")
    s.add_argument("--out")
    s.set_defaults(func=cmd_birkhoff)

    s = sub.add_parser("verify", help="exact checks")
    s.add_argument("check", choices=["consistency", "invariance", "example", "basis-m3",
                                     "complementarity", "bistochastic"])
    s.add_argument("dist", nargs="?")
    s.add_argument("--level", "-n", type=int, default=2)
    s.add_argument("--matrix", help="sparse matrix file to validate instead of a distribution")
    s.add_argument("--lower", help="reference lower-level sparse matrix")
    s.add_argument("--seed")
    s.add_argument("--m", type=int, default=6)
    s.add_argument("--grid", default="1/4,1/2,3/4,1")
    s.add_argument("--detect-seeds", help="';'-separated seed tuples")
    s.add_argument("--u")
    s.add_argument("--v")
    s.add_argument("--out")
    s.set_defaults(func=cmd_verify)
    return p


_NEEDS_DIST = {"invariance", "complementarity", "bistochastic"}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "verify":
            if args.check in _NEEDS_DIST and not args.dist:
                raise InputError(f"verify {args.check} needs a distribution file")
            if args.check == "consistency" and not (args.dist or args.matrix):
                raise InputError("verify consistency needs a distribution file or --matrix")
            if args.check == "invariance" and not args.seed:
                raise InputError("verify invariance needs --seed")
            if args.check == "complementarity" and not (args.u and args.v):
                raise InputError("verify complementarity needs --u and --v")
        return args.func(args)
    except ResourceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (NPointError, ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
