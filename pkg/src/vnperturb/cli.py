"""Command line front end: ``vnperturb {run,check,distance,conjugate}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import acceptance
from .algebra import full_algebra, read_subalgebra
from .errors import HypothesisError, PerturbationError
from .expectation import trace_expectation
from .harness import Scenario, format_shape, parse_shape, read_config, run_suite, summary_json
from .linalg import DEFAULT_TOL, format_matrix
from .perturbation import conjugating_unitary, distance_interval


def _load_algebra(path: str, tol):
    with open(path) as fh:
        return read_subalgebra(fh, tol)


def _tolerance(args):
    return DEFAULT_TOL.with_overrides(rank_eps=args.rank_eps, eq_eps=args.eq_eps, psd_eps=args.psd_eps)


def _write_json(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_run(args) -> int:
    params = read_config(Path(args.config).read_text()) if args.config else {}
    for key in ("epsilon", "seed", "trials", "rank_eps", "eq_eps", "psd_eps", "pp_budget"):
        value = getattr(args, key)
        if value is not None:
            params[key] = value
    if args.dim is not None:
        params["ambient_dim"] = args.dim
    if args.shape is not None:
        params["shape"] = args.shape
    if args.allow_above_threshold:
        params["strict"] = False
    dim = params.get("ambient_dim", 2)
    params["shape"] = tuple(parse_shape(params.get("shape", "masa"), dim))
    scenario = Scenario(**params)

    records, summary = run_suite(scenario, workers=args.workers)
    doc = {
        "summary": summary,
        "trials": [
            {"trial": r.trial, "status": r.status, "checks": r.checks, "report": r.report,
             "error": r.error, "wall_time": r.wall_time}
            for r in records
        ],
    }
    if args.out:
        _write_json(doc, args.out)
    if args.summary_out:
        Path(args.summary_out).write_text(summary_json(summary) + "\n")
    counts = summary["counts"]
    print(f"M_{scenario.ambient_dim} shape {format_shape(scenario.shape)} epsilon {scenario.epsilon}: "
          f"{counts['pass']} pass, {counts['fail']} fail, {counts['error']} error, "
          f"{counts['hypothesis-error']} gated; max ||u-I||/d_hi = {summary['max_ratio_u_over_dhi']:.4f}")
    return 0 if summary["all_pass"] else 1


def cmd_check(args) -> int:
    results = acceptance.run_all(trials=args.trials, seed=args.seed, echo=print)
    ok = all(r.passed for r in results)
    print(f"{sum(r.passed for r in results)}/{len(results)} criteria passed")
    return 0 if ok else 1


def cmd_distance(args) -> int:
    tol = _tolerance(args)
    N = _load_algebra(args.first, tol)
    M = _load_algebra(args.second, tol)
    L = _load_algebra(args.ambient, tol) if args.ambient else full_algebra(N.ambient_dim)
    d = distance_interval(N, M, trace_expectation(L, M, tol), trace_expectation(L, N, tol),
                          args.samples, args.seed, args.certificate, tol)
    _write_json({"lo": d.lo, "hi": d.hi, "hi_source": d.hi_source}, args.out)
    return 0


def cmd_conjugate(args) -> int:
    tol = _tolerance(args)
    N = _load_algebra(args.first, tol)
    M = _load_algebra(args.second, tol)
    L = _load_algebra(args.ambient, tol) if args.ambient else full_algebra(N.ambient_dim)
    E_N, E_M = trace_expectation(L, N, tol), trace_expectation(L, M, tol)
    d = distance_interval(N, M, E_M, E_N, args.samples, args.seed, args.certificate, tol)
    try:
        rep = conjugating_unitary(N, M, L, E_N, E_M, d, tol, rng_seed=args.seed,
                                  strict=not args.allow_above_threshold)
    except HypothesisError as exc:
        _write_json({"d_lo": d.lo, "d_hi": d.hi, "hi_source": d.hi_source, "error": str(exc)}, args.out)
        return 1
    doc = rep.to_dict()
    _write_json(doc, args.out)
    if args.unitary_out:
        Path(args.unitary_out).write_text(format_matrix(rep.u))
    return 0 if rep.bound_20_ok and rep.bound_14_ok and rep.conjugacy_residual <= tol.eq_eps else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vnperturb", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def tolerances(p):
        p.add_argument("--rank-eps", type=float, dest="rank_eps")
        p.add_argument("--eq-eps", type=float, dest="eq_eps")
        p.add_argument("--psd-eps", type=float, dest="psd_eps")

    p = sub.add_parser("run", help="run randomized perturbation trials")
    p.add_argument("--config", help="key = value file with scenario fields")
    p.add_argument("--dim", type=int)
    p.add_argument("--shape", help="'k1xm1,k2xm2,...' or 'masa'")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--pp-budget", type=int, dest="pp_budget")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--allow-above-threshold", action="store_true",
                   help="attempt instances whose distance bound is not below 1/15")
    p.add_argument("--out", help="full report JSON")
    p.add_argument("--summary-out", help="summary JSON only (deterministic per scenario)")
    tolerances(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("check", help="run the acceptance suites")
    p.add_argument("--trials", type=int, default=100, help="trials per conjugation configuration")
    p.add_argument("--seed", type=int, default=20240101)
    p.set_defaults(func=cmd_check)

    for name, func, helptext in (("distance", cmd_distance, "distance interval between two subalgebras"),
                                 ("conjugate", cmd_conjugate, "conjugating unitary between two subalgebras")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("first", help="subalgebra file for N")
        p.add_argument("second", help="subalgebra file for M")
        p.add_argument("--ambient", help="subalgebra file for L (default: the full matrix algebra)")
        p.add_argument("--certificate", type=float, help="certified upper bound on d(N, M)")
        p.add_argument("--samples", type=int, default=64)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out")
        tolerances(p)
        if name == "conjugate":
            p.add_argument("--allow-above-threshold", action="store_true")
            p.add_argument("--unitary-out", help="write u in the matrix text format")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (PerturbationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
