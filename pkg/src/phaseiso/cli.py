"""Command-line entry point.

Subcommands: check, decompose, ortho, lemma, gen, fuzz.  All results are
JSON on stdout (or --out); progress notes go to stderr.  The PHASE_TOL
environment variable overrides the default comparison tolerance; an explicit
--tol flag wins over both.

Exit codes: 0 success; 1 failed checks; 2 not decomposable; 3 route or
input-plan errors; 4 functional not exposed; 64 malformed input files;
65 dimension mismatches.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

import numpy as np

from .decomposition import (DecompositionError, NoStabilization, NotDecomposable,
                            NotExposed, RouteUnsupported, SmoothnessFailure,
                            SurjectivityNotDeclared, decompose, plan_queries,
                            recover_functional, route_for)
from .harness import CampaignConfig, run_campaign
from .orthogonality import birkhoff_verdict
from .phase_maps import (MissingSamples, PhaseMapOracle, SampleFormatError,
                         check_phase_equation, generate_isometry,
                         generate_phase_isometry, key_string, read_samples,
                         write_samples)
from .settings import DEFAULT_TOL, Tolerances, tolerances_from_env
from .spaces import NormSpec

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_NOT_DECOMPOSABLE = 2
EXIT_ROUTE_ERROR = 3
EXIT_NOT_EXPOSED = 4
EXIT_BAD_INPUT = 64
EXIT_DIMENSION = 65


def _log(msg: str):
    print(msg, file=sys.stderr)


def _emit(data: dict, out: Optional[str]):
    text = json.dumps(data, indent=2, sort_keys=True)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
        _log(f"wrote {out}")
    else:
        print(text)


def _load_space(arg: str) -> NormSpec:
    try:
        if arg.strip().startswith("{"):
            return NormSpec.from_json(arg)
        with open(arg) as fh:
            return NormSpec.from_json(json.load(fh))
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        raise SampleFormatError(arg, 0, f"cannot load space description: {exc}")


def _tolerances(args) -> Tolerances:
    tol = tolerances_from_env(DEFAULT_TOL)
    if getattr(args, "tol", None) is not None:
        tol = tol.with_rel(args.tol)
    return tol


def _parse_vector(text: str) -> np.ndarray:
    try:
        return np.asarray(json.loads(text), dtype=float)
    except (json.JSONDecodeError, TypeError, ValueError) as exc:
        raise SampleFormatError("<arg>", 0, f"cannot parse vector {text!r}: {exc}")


def _table_oracle(space: NormSpec, samples_path: str, declared: bool,
                  name: str, codomain: Optional[NormSpec] = None) -> PhaseMapOracle:
    pairs = read_samples(samples_path)
    for x, fx in pairs:
        if x.shape != (space.dim,):
            raise _dimension_error(space.dim, x.shape)
    codomain = codomain or space
    for x, fx in pairs:
        if fx.shape != (codomain.dim,):
            raise _dimension_error(codomain.dim, fx.shape)
    return PhaseMapOracle.from_table(space, codomain, pairs,
                                     declared_surjective=declared, name=name)


class _DimensionError(ValueError):
    pass


def _dimension_error(expected, got):
    return _DimensionError(f"dimension mismatch: space has dim {expected}, sample has shape {got}")


def _seed_oracle(space: NormSpec, oracle_seed: int, even: bool) -> PhaseMapOracle:
    t = generate_isometry(space, oracle_seed)
    return generate_phase_isometry(t, oracle_seed, even=even)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_check(args) -> int:
    tol = _tolerances(args)
    space = _load_space(args.space)
    codomain = _load_space(args.codomain) if args.codomain else None
    oracle = _table_oracle(space, args.samples, declared=False, name="check",
                           codomain=codomain)
    points = [x for x, _ in read_samples(args.samples)]
    pairs = [(points[i], points[j])
             for i in range(len(points)) for j in range(i, len(points))]
    cap = args.max_pairs
    if len(pairs) > cap:
        rng = np.random.default_rng(np.random.SeedSequence([args.seed, 0xC4E]))
        idx = rng.choice(len(pairs), size=cap, replace=False)
        pairs = [pairs[i] for i in sorted(idx)]
    report = check_phase_equation(oracle, pairs, tol)
    data = report.to_dict()
    data["tolerances"] = tol.to_dict()
    data["sampled_pairs"] = len(pairs)
    _emit(data, args.out)
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def cmd_ortho(args) -> int:
    tol = _tolerances(args)
    space = _load_space(args.space)
    x = space.vector(_parse_vector(args.x))
    y = space.vector(_parse_vector(args.y))
    verdict = birkhoff_verdict(x, y, tol)
    data = verdict.to_dict()
    data["x"] = list(x.coords)
    data["y"] = list(y.coords)
    data["tolerances"] = tol.to_dict()
    _emit(data, args.out)
    return EXIT_OK


def cmd_decompose(args) -> int:
    tol = _tolerances(args)
    space = _load_space(args.space)
    route = args.route
    declared = bool(args.declare_surjective)
    if args.samples:
        resolved = route_for(space) if route == "auto" else route
        plan = plan_queries(space, resolved, args.seed, tol)
        codomain = _load_space(args.codomain) if args.codomain else None
        oracle = _table_oracle(space, args.samples, declared, name="table",
                               codomain=codomain)
        missing = oracle.missing_points(plan.all_points())
        if missing:
            raise MissingSamples(missing)
        f = oracle
    else:
        f = _seed_oracle(space, args.oracle_seed, even=not args.uneven)
        if declared:
            f.declared_surjective = True
        plan = None
    cert = decompose(f, route=route, seed=args.seed, tol=tol,
                     force=args.force, plan=plan)
    data = cert.to_json()
    _log(f"route={cert.route} residual_max={cert.residual_max:.3e} "
         f"verified_pairs={cert.verified_pairs}")
    _emit(data, args.out)
    return EXIT_OK


def cmd_lemma(args) -> int:
    tol = _tolerances(args)
    space = _load_space(args.space)
    coords = _parse_vector(args.functional)
    dn = space.dual_norm_of(coords)
    if args.normalize:
        coords = coords / dn
    elif abs(dn - 1.0) > 1e-6:
        raise _DimensionError(f"functional must be unit in the dual norm (got {dn}); "
                              "pass --normalize to rescale")
    x_star = space.functional(coords)
    if args.samples:
        codomain = _load_space(args.codomain) if args.codomain else None
        f = _table_oracle(space, args.samples, declared=False, name="lemma",
                          codomain=codomain)
    else:
        f = _seed_oracle(space, args.oracle_seed, even=not args.uneven)
    rng = np.random.default_rng(np.random.SeedSequence([args.seed, 0x1E44]))
    verify = [rng.standard_normal(space.dim) for _ in range(args.verify_points)]
    rec = recover_functional(f, x_star, verify_points=verify, tol=tol)
    data = rec.to_dict()
    data["tolerances"] = tol.to_dict()
    _emit(data, args.out)
    return EXIT_OK


def cmd_gen(args) -> int:
    tol = _tolerances(args)
    space = _load_space(args.space)
    route = route_for(space) if args.route == "auto" else args.route
    oracle = _seed_oracle(space, args.seed, even=not args.uneven)
    plan = plan_queries(space, route, args.seed, tol)
    points = plan.all_points()
    rng = np.random.default_rng(np.random.SeedSequence([args.seed, 0xE57A]))
    extras = [rng.standard_normal(space.dim) for _ in range(args.extra)]
    write_samples(args.out, oracle, points + extras)
    _log(f"wrote {len(points) + len(extras)} samples to {args.out}")
    if args.hidden:
        truth = oracle.hidden_truth
        signs = truth["signs"].to_dict()
        data = {"space": space.to_json(), "seed": args.seed,
                "even": not args.uneven, "route": route,
                "T": [list(row) for row in truth["T"].matrix],
                "signs": signs}
        with open(args.hidden, "w") as fh:
            json.dump(data, fh, indent=2, sort_keys=True)
        _log(f"wrote hidden truth to {args.hidden}")
    return EXIT_OK


def cmd_fuzz(args) -> int:
    tol = _tolerances(args)
    space = _load_space(args.space)
    config = CampaignConfig(space=space, trials=args.trials, seed=args.seed,
                            route=args.route, tolerances=tol,
                            even=not args.uneven)
    report = run_campaign(config)
    data = report.to_dict()
    _emit(data, args.out)
    _log(f"{report.successes}/{len(report.outcomes)} trials succeeded "
         f"in {report.wall_seconds:.2f}s")
    return EXIT_OK if not report.failures else EXIT_CHECK_FAILED


# ---------------------------------------------------------------------------
# argument wiring
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phaseiso",
        description="phase-isometry checking and sign-times-isometry decomposition")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed_default=0, codomain=False):
        p.add_argument("--space", required=True,
                       help="space description: JSON file path or inline JSON")
        p.add_argument("--tol", type=float, default=None,
                       help="override the comparison tolerance")
        p.add_argument("--seed", type=int, default=seed_default)
        p.add_argument("--out", default=None, help="write the JSON result here")
        if codomain:
            p.add_argument("--codomain", default=None,
                           help="codomain space for sample tables (defaults to --space)")

    p = sub.add_parser("check", help="verify the defining equation on sample pairs")
    common(p, codomain=True)
    p.add_argument("--samples", required=True, help="JSONL file of {x, fx} records")
    p.add_argument("--max-pairs", type=int, default=10_000,
                   help="cap on pairs formed from the sample pool")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("ortho", help="Birkhoff orthogonality verdict")
    common(p)
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.set_defaults(func=cmd_ortho)

    p = sub.add_parser("decompose", help="factor an oracle into sign * isometry")
    common(p, codomain=True)
    p.add_argument("--samples", default=None, help="JSONL sample table for the oracle")
    p.add_argument("--oracle-seed", type=int, default=0,
                   help="regenerate a seeded oracle instead of reading samples")
    p.add_argument("--uneven", action="store_true",
                   help="seeded oracle draws per-ray signs (not odd)")
    p.add_argument("--route", choices=["auto", "one_dim", "smooth", "linf", "l1", "generic"],
                   default="auto")
    p.add_argument("--declare-surjective", action="store_true")
    p.add_argument("--force", action="store_true",
                   help="attempt decomposition without the surjectivity declaration")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("lemma", help="recover the dual functional matched to an exposed x*")
    common(p, codomain=True)
    p.add_argument("--functional", required=True, help="dual coordinates as JSON")
    p.add_argument("--normalize", action="store_true",
                   help="rescale the functional to unit dual norm first")
    p.add_argument("--samples", default=None)
    p.add_argument("--oracle-seed", type=int, default=0)
    p.add_argument("--uneven", action="store_true")
    p.add_argument("--verify-points", type=int, default=100)
    p.set_defaults(func=cmd_lemma)

    p = sub.add_parser("gen", help="generate a hidden factorization and its samples")
    common(p, seed_default=42)
    p.add_argument("--even", action="store_true",
                   help="line-constant signs (odd, onto oracle); the default")
    p.add_argument("--uneven", action="store_true",
                   help="independent per-ray signs (oddness generically fails)")
    p.add_argument("--route", choices=["auto", "one_dim", "smooth", "linf", "l1", "generic"],
                   default="auto")
    p.add_argument("--extra", type=int, default=100,
                   help="extra random sample points beyond the probe plan")
    p.add_argument("--hidden", default=None, help="write the hidden truth JSON here")
    p.set_defaults(func=cmd_gen)
    # gen writes samples to --out
    for action in p._actions:
        if action.dest == "out":
            action.required = True
            action.help = "write the JSONL samples here"

    p = sub.add_parser("fuzz", help="seeded generate/decompose/score campaign")
    common(p, seed_default=42)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--route", choices=["auto", "one_dim", "smooth", "linf", "l1", "generic"],
                   default="auto")
    p.add_argument("--uneven", action="store_true")
    p.set_defaults(func=cmd_fuzz)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SampleFormatError as exc:
        _log(f"input error: {exc}")
        return EXIT_BAD_INPUT
    except _DimensionError as exc:
        _log(f"error: {exc}")
        return EXIT_DIMENSION
    except MissingSamples as exc:
        _log(f"sample table incomplete: {exc}")
        _emit({"missing_probes": [list(p) for p in exc.points]}, getattr(args, "out", None))
        return EXIT_ROUTE_ERROR
    except NotExposed as exc:
        _log(f"not exposed: {exc}")
        return EXIT_NOT_EXPOSED
    except NotDecomposable as exc:
        _log(f"not decomposable: {exc}")
        _emit({"not_decomposable": str(exc),
               "witness": getattr(exc, "witness", None)}, getattr(args, "out", None))
        return EXIT_NOT_DECOMPOSABLE
    except (RouteUnsupported, SurjectivityNotDeclared, NoStabilization,
            SmoothnessFailure) as exc:
        _log(f"route error: {exc}")
        return EXIT_ROUTE_ERROR
    except DecompositionError as exc:
        _log(f"decomposition error: {exc}")
        return EXIT_ROUTE_ERROR
    except ValueError as exc:
        msg = str(exc)
        _log(f"error: {msg}")
        return EXIT_DIMENSION if "dimension" in msg else EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
