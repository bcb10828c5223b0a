"""
Command-line entry point

JSON reports go to stdout (or --output); progress and summaries go to stderr.
Exit codes: 0 all checks pass, 1 check failure, 2 input error, 3 numerical
non-convergence.
"""

import argparse
import sys
import time
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
from mpmath import mp

from . import cache, config
from .algebra import OrderedPartition
from .curve import CurveSpec, sheet_point, validate_curve
from .differentials import exact_relation_defect, residue_samples, szego_factorization_defect
from .errors import CheckFailure, InputError, ZnkzError
from .homology import elementary_cycles, export_cycles
from .kz import (SolverContext, cycle_covariance_check, dim_counts, enumerate_partitions,
                 independent_cycle_sets, kz_residual, partition_count, pset_spread, singlet_residual,
                 solution_rank, solve_integral)
from .periods import bilinear_defect, exact_period_defect, normalization_defect, symmetry_defect
from .reports import (CheckReport, IdentityReport, IdentityResult, RunConfig, complex_matrix,
                      complex_pair, envelope, load_curve, partition_entries, rational_str, real_str,
                      write_fixture, write_report)
from .theta import (CharacteristicSolver, a_period_identity_defect, modulus_ratio_spread, product_theta_solution,
                    ratio_spread, smirnov_sl2, theta_product_check, theta_solution, thomae_check)
from .verify import registry_cases, run_cases

CURVE_COMMANDS = ("genus", "periods", "solve", "check-kz", "check-singlet", "theta-solve", "check-thomae",
                  "check-smirnov", "check-szego", "check-exact", "export-cycles")

DEFAULT_IDENTITY_GRID = ((2, 1), (2, 2), (3, 1), (3, 2), (4, 1))

# Standard small instances written by --fixtures
FIXTURE_CURVES = {
    "n2_m2": (2, 2, ["0", "1", "2", "3"]),
    "n3_m1": (3, 1, ["0", "1", ["2", "1"]]),
}


def log(message: str) -> None:
    if config.LOG_PROGRESS:
        print(message, file=sys.stderr)


def banner(title: str) -> None:
    log("=" * 60)
    log(title)
    log("=" * 60)


def _ints(text: Optional[str]) -> Optional[List[int]]:
    if text is None:
        return None
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise InputError(f"expected comma-separated integers, got '{text}'")


def _cycles(text: Optional[str]) -> Optional[List[str]]:
    return [t.strip() for t in text.split(",") if t.strip()] if text else None


def _partition(text: Optional[str]) -> Optional[OrderedPartition]:
    """'1,2|3,4' -> ((1, 2), (3, 4))"""
    if text is None:
        return None
    try:
        return OrderedPartition.from_blocks([[int(i) for i in b.split(",")] for b in text.split("|")])
    except ValueError:
        raise InputError(f"cannot parse partition '{text}'")


def _check(run: RunConfig, key: str, residual, details: Dict[str, Any], bits: int) -> Dict[str, Any]:
    tol = run.tolerance if run.tolerance is not None else config.CHECK_TOLERANCES[key]
    report = CheckReport(residual=real_str(residual, bits), tolerance=repr(float(tol)),
                         passed=bool(residual < tol), details=details)
    return report.model_dump(by_alias=True)


def _sample_points(spec: CurveSpec, count: int, seed: int) -> List[Any]:
    """Random points above every branch point, so the declared paths stay clear"""
    rng = np.random.default_rng(seed)
    centre = sum((l.real for l in spec.lambdas), mp.mpf(0)) / spec.degree
    top = max(l.imag for l in spec.lambdas)
    scale = max(spec.diameter, mp.mpf(1))
    points = []
    for u, v in rng.uniform(size=(count, 2)):
        points.append(mp.mpc(centre + scale * (mp.mpf(u) - mp.mpf(1) / 2), top + scale * (mp.mpf(v) / 2 + mp.mpf(1) / 10)))
    return points


def _perturbed(spec: CurveSpec, count: int, seed: int, scale: float) -> List[List[Any]]:
    """Nearby λ configurations, moved by scale · min distance"""
    rng = np.random.default_rng(seed)
    step = spec.min_distance * mp.mpf(scale)
    out = []
    for _ in range(count):
        moves = rng.uniform(-1, 1, size=(spec.degree, 2))
        out.append([l + step * mp.mpc(a, b) for l, (a, b) in zip(spec.lambdas, moves)])
    return out


# Commands on a curve

def cmd_genus(run: RunConfig, spec: CurveSpec, args) -> Dict[str, Any]:
    return {"N": spec.N, "m": spec.m, "genus": spec.genus, "L": spec.L,
            "partitions": partition_count(spec.N, spec.m)}


def cmd_periods(run: RunConfig, spec: CurveSpec, args) -> Dict[str, Any]:
    bits = spec.precision_bits
    context = SolverContext.build(spec, args.workers)
    pd = context.periods
    return {
        "A": complex_matrix(pd.A_matrix, bits),
        "tau": complex_matrix(pd.tau, bits),
        "sigma": complex_matrix(pd.sigma, bits),
        "D": complex_matrix(pd.D, bits),
        "err": real_str(pd.err, bits),
        "orientation_flipped": pd.flipped,
        "normalization_defect": real_str(normalization_defect(pd), bits),
        "symmetry_defect": real_str(symmetry_defect(pd), bits),
        "bilinear_defect": real_str(bilinear_defect(spec, context.intersection, pd), bits),
        "exact_period_defect": real_str(exact_period_defect(pd), bits),
    }


def cmd_solve(run: RunConfig, spec: CurveSpec, args) -> Dict[str, Any]:
    bits = spec.precision_bits
    context = SolverContext.build(spec, args.workers)
    cycles, p_set = _cycles(args.cycles), _ints(args.pset)
    sol = solve_integral(spec, context.periods, cycles, p_set, workers=args.workers)
    values = sol.zeta_entries if args.theorem == 2 else sol.entries
    meta = sol.metadata
    out = {
        "solutions": partition_entries(values, bits),
        "branch_metadata": {
            "cycles": meta["cycles"],
            "p_set": meta["p_set"],
            "delta_branch": meta["delta_branch"],
            "log_delta": complex_pair(meta["log_delta"], bits),
            "orientation_flipped": meta["orientation_flipped"],
        },
        "theorem": args.theorem,
        "determinant_disagreement": real_str(sol.disagreement, bits),
        "period_err": real_str(context.periods.err, bits),
    }
    if args.psets:
        p_sets = [_ints(chunk) for chunk in args.psets.split(";")]
        out["pset_spread"] = real_str(pset_spread(spec, context.periods, p_sets, cycles), bits)
    if args.rank:
        family = [solve_integral(spec, context.periods, c, p_set, workers=args.workers)
                  for c in independent_cycle_sets(spec)]
        rank = solution_rank(family)
        out["rank"] = {"rank": rank["rank"], "certified": False,
                       "singular_values": [repr(v) for v in rank["singular_values"]]}
    if args.covariance:
        cov = cycle_covariance_check(spec, context.periods, cycles, p_set)
        out["covariance"] = {"ratio": complex_pair(cov["ratio"], bits), "spread": real_str(cov["spread"], bits),
                             "expected": cov["expected"]}
    return out


def cmd_check_kz(run: RunConfig, spec: CurveSpec, args) -> Dict[str, Any]:
    bits = spec.precision_bits
    context = SolverContext.build(spec, args.workers)
    ps = _ints(args.p) or list(range(1, spec.degree + 1))
    per_p = {}
    worst = mp.mpf(0)
    for p in ps:
        r = kz_residual(spec, context, p, cycle_indices=_cycles(args.cycles), p_set=_ints(args.pset))
        per_p[str(p)] = real_str(r, bits)
        worst = max(worst, r)
    return _check(run, "check-kz", worst, {"per_branch": per_p}, bits)


def cmd_check_singlet(run: RunConfig, spec: CurveSpec, args) -> Dict[str, Any]:
    bits = spec.precision_bits
    context = SolverContext.build(spec, args.workers)
    sol = solve_integral(spec, context.periods, _cycles(args.cycles), _ints(args.pset), workers=args.workers)
    return _check(run, "check-singlet", singlet_residual(spec, sol), {}, bits)


def cmd_theta_solve(run: RunConfig, spec: CurveSpec, args) -> Dict[str, Any]:
    bits = spec.precision_bits
    context = SolverContext.build(spec, args.workers)
    periods = context.periods
    solver = CharacteristicSolver(spec, periods)
    index_set = _ints(args.index_set)
    sol = solve_integral(spec, periods, workers=args.workers)
    thetas, product_form, chars, defects = {}, {}, {}, []
    kappa = None
    for part in enumerate_partitions(spec.N, spec.m):
        key = part.canonical()
        thetas[key] = theta_solution(spec, periods, key, index_set, solver)
        product_form[key] = product_theta_solution(spec, periods, key, index_set, solver)
        identity = a_period_identity_defect(spec, periods, key, solver)
        kappa = identity["kappa"]
        defects.append(identity["defect"])
        chars[key] = identity["characteristics"]
    spread = ratio_spread(thetas, sol.entries)
    details = {
        "solutions": partition_entries(thetas, bits),
        "characteristics": [{"partition": k.to_json(), **chars[k].to_json()}
                            for k in sorted(chars, key=lambda k: k.blocks)],
        "kappa": kappa,
        "a_period_defect": real_str(max(defects), bits),
        "product_form_modulus_spread": real_str(modulus_ratio_spread(product_form, sol.entries), bits),
    }
    a_tol = config.CHECK_TOLERANCES["a-period"]
    residual = spread if max(defects) < a_tol else max(spread, mp.mpf(1))
    return _check(run, "theta-solve", residual, details, bits)


def cmd_check_thomae(run: RunConfig, spec: CurveSpec, args) -> Dict[str, Any]:
    bits = spec.precision_bits
    context = SolverContext.build(spec, args.workers)
    solver = CharacteristicSolver(spec, context.periods)
    samples = _perturbed(spec, args.samples, run.seed, args.scale)
    chosen = _partition(args.partition)
    parts = [chosen] if chosen else [p.canonical() for p in enumerate_partitions(spec.N, spec.m)]
    spreads = {}
    worst = mp.mpf(0)
    for part in parts:
        s = thomae_check(spec, context, part, samples, solver)
        spreads[str(part.to_json())] = real_str(s, bits)
        worst = max(worst, s)
    product = theta_product_check(spec, context, parts, samples, solver)
    details = {"per_partition": spreads, "theta_product_spread": real_str(product, bits), "samples": len(samples)}
    return _check(run, "check-thomae", max(worst, product), details, bits)


def cmd_check_smirnov(run: RunConfig, spec: CurveSpec, args) -> Dict[str, Any]:
    bits = spec.precision_bits
    context = SolverContext.build(spec, args.workers)
    solver = CharacteristicSolver(spec, context.periods)
    values = smirnov_sl2(spec, context.periods, solver)
    sol = solve_integral(spec, context.periods, workers=args.workers)
    spread = modulus_ratio_spread(values, sol.entries)
    return _check(run, "check-smirnov", spread, {"solutions": partition_entries(values, bits)}, bits)


def cmd_check_szego(run: RunConfig, spec: CurveSpec, args) -> Dict[str, Any]:
    bits = spec.precision_bits
    points = _sample_points(spec, args.samples, run.seed)
    worst = mp.mpf(0)
    residues = mp.mpf(0)
    parts = enumerate_partitions(spec.N, spec.m)
    for part in parts:
        for p in range(1, spec.degree + 1):
            for z in points:
                for sheet in range(spec.N):
                    worst = max(worst, szego_factorization_defect(spec, part, p, sheet_point(spec, z, sheet)))
            residues = max(residues, residue_samples(spec, part, p))
    details = {"points": len(points), "partitions": len(parts), "residue_max": real_str(residues, bits)}
    return _check(run, "check-szego", worst, details, bits)


def cmd_check_exact(run: RunConfig, spec: CurveSpec, args) -> Dict[str, Any]:
    bits = spec.precision_bits
    points = _sample_points(spec, args.samples, run.seed)
    worst = mp.mpf(0)
    for part in enumerate_partitions(spec.N, spec.m):
        for p in range(1, spec.degree + 1):
            for z in points:
                worst = max(worst, abs(exact_relation_defect(spec, part, p, z, sheet=0)))
    return _check(run, "check-exact", worst, {"points": len(points)}, bits)


def cmd_export_cycles(run: RunConfig, spec: CurveSpec, args) -> Dict[str, Any]:
    return {"cycles": export_cycles(spec, elementary_cycles(spec))}


# Commands without a curve

def cmd_dim_count(run: RunConfig, args) -> Dict[str, Any]:
    if args.N is None or args.m is None:
        raise InputError("dim-count needs --N and --m")
    counts = dim_counts(args.N, args.m)
    counts["ratio"] = rational_str(counts["ratio"])
    return counts


def cmd_check_identities(run: RunConfig, args) -> Dict[str, Any]:
    if (args.N is None) != (args.m is None):
        raise InputError("give both --N and --m, or neither")
    grid = [(args.N, args.m)] if args.N is not None else list(DEFAULT_IDENTITY_GRID)
    cases = []
    for N, m in grid:
        cases.extend(registry_cases(N, m, args.id, args.trials, run.seed))
    results = run_cases(cases, args.workers)
    passed = all(r["pass"] for r in results if not r.get("informational"))
    report = IdentityReport(results=[IdentityResult(**{("passed" if k == "pass" else k): v for k, v in r.items()})
                                     for r in results], passed=passed)
    return report.model_dump(by_alias=True, exclude_none=True)


CURVE_HANDLERS: Dict[str, Callable] = {
    "genus": cmd_genus,
    "periods": cmd_periods,
    "solve": cmd_solve,
    "check-kz": cmd_check_kz,
    "check-singlet": cmd_check_singlet,
    "theta-solve": cmd_theta_solve,
    "check-thomae": cmd_check_thomae,
    "check-smirnov": cmd_check_smirnov,
    "check-szego": cmd_check_szego,
    "check-exact": cmd_check_exact,
    "export-cycles": cmd_export_cycles,
}

PLAIN_HANDLERS: Dict[str, Callable] = {
    "dim-count": cmd_dim_count,
    "check-identities": cmd_check_identities,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="znkz", description="Level-0 sl_N KZ solutions on Z_N curves")
    parser.add_argument("--fixtures", metavar="DIR", help="regenerate the fixture corpus into DIR and exit")
    parser.add_argument("--cache", action="store_true", help="persist per-loop period moments on disk")
    parser.add_argument("--workers", type=int, default=config.MAX_WORKERS, help="thread pool width")
    parser.add_argument("--quiet", action="store_true", help="no progress output on stderr")
    sub = parser.add_subparsers(dest="command")

    def common(p, curve=True):
        if curve:
            p.add_argument("curve_file", help="curve JSON")
        p.add_argument("--precision", type=int, default=None, help="mantissa bits (default from the curve file)")
        p.add_argument("--output", default=None, help="write the report here instead of stdout")
        p.add_argument("--seed", type=int, default=config.IDENTITY_SEED)
        p.add_argument("--tolerance", type=float, default=None, help="override the pass threshold")
        return p

    for name in ("genus", "periods", "check-szego", "check-exact", "export-cycles", "check-smirnov"):
        p = common(sub.add_parser(name))
        if name in ("check-szego", "check-exact"):
            p.add_argument("--samples", type=int, default=4)
    for name in ("solve", "check-kz", "check-singlet"):
        p = common(sub.add_parser(name))
        p.add_argument("--cycles", help="comma-separated cycle references, e.g. A1,B2")
        p.add_argument("--pset", help="comma-separated branch indices p_1..p_L")
        if name == "solve":
            p.add_argument("--theorem", type=int, choices=(1, 2), default=1)
            p.add_argument("--psets", help="';'-separated p-sets to compare")
            p.add_argument("--rank", action="store_true", help="numerical rank over several cycle sets")
            p.add_argument("--covariance", action="store_true", help="integer change of cycles")
        if name == "check-kz":
            p.add_argument("--p", help="branch indices to differentiate in (default all)")
    p = common(sub.add_parser("theta-solve"))
    p.add_argument("--index-set", help="comma-separated indices i_1..i_L")
    p = common(sub.add_parser("check-thomae"))
    p.add_argument("--partition", help="blocks like '1,2|3,4' (default all)")
    p.add_argument("--samples", type=int, default=3)
    p.add_argument("--scale", type=float, default=1e-2, help="λ perturbation relative to min distance")
    p = common(sub.add_parser("dim-count"), curve=False)
    p.add_argument("--N", type=int)
    p.add_argument("--m", type=int)
    p = common(sub.add_parser("check-identities"), curve=False)
    p.add_argument("--id", action="append", help="identity id (repeatable, default all)")
    p.add_argument("--N", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--trials", type=int, default=config.IDENTITY_TRIALS)
    return parser


def _options(args) -> Dict[str, Any]:
    skip = {"command", "curve_file", "precision", "output", "seed", "tolerance", "quiet", "cache", "fixtures",
            "workers"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def execute(args) -> Dict[str, Any]:
    """Runs one subcommand and returns its report; check failures raise CheckFailure"""
    spec = None
    if args.command in CURVE_COMMANDS:
        spec = load_curve(args.curve_file, args.precision)
    bits = spec.precision_bits if spec else (args.precision or config.DEFAULT_PRECISION_BITS)
    try:
        run = RunConfig(command=args.command, curve_file=getattr(args, "curve_file", None), precision_bits=bits,
                        output=args.output, seed=args.seed, tolerance=args.tolerance, options=_options(args))
    except ValueError as e:
        raise InputError(str(e))
    start = time.time()
    with mp.workprec(bits):
        if spec is not None:
            body = CURVE_HANDLERS[args.command](run, spec, args)
        else:
            body = PLAIN_HANDLERS[args.command](run, args)
    report = envelope(run, spec, body)
    if config.LOG_TIMINGS:
        log(f"  {args.command} finished in {time.time() - start:.1f}s")
    if report.get("pass") is False:
        raise CheckFailure(f"{args.command} did not pass", report)
    return report


def regenerate_fixtures(directory: str, workers: int) -> List[str]:
    """Periods and solutions of the standard small instances, with provenance"""
    written = []
    for name, (N, m, lambdas) in FIXTURE_CURVES.items():
        spec = validate_curve(N, m, lambdas)
        banner(f"Fixture {name}: N={N}, m={m}")
        for command, handler in (("periods", cmd_periods), ("solve", cmd_solve)):
            args = argparse.Namespace(workers=workers, cycles=None, pset=None, theorem=1, psets=None,
                                      rank=False, covariance=False)
            run = RunConfig(command=command, precision_bits=spec.precision_bits)
            with mp.workprec(spec.precision_bits):
                report = envelope(run, spec, handler(run, spec, args))
            report["curve"] = spec.to_json()
            written.append(write_fixture(report, f"{name}_{command}", directory))
            log(f"  wrote {written[-1]}")
    return written


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.quiet:
        config.LOG_PROGRESS = False
        config.LOG_CHARACTERISTICS = False
        config.LOG_TIMINGS = False
    if args.cache:
        cache.enable_disk_cache(True)
    try:
        if args.fixtures:
            regenerate_fixtures(args.fixtures, args.workers)
            return 0
        if not args.command:
            parser.print_help(sys.stderr)
            return InputError.code
        banner(f"znkz {args.command}")
        report = execute(args)
        write_report(report, args.output)
        return 0
    except CheckFailure as e:
        write_report(e.report, args.output)
        log(f"CHECK FAILED: {e}")
        return e.code
    except ZnkzError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return e.code


if __name__ == "__main__":
    sys.exit(main())
