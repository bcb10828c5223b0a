"""
Level-0 sl_N KZ solutions from period determinants

f_Λ = Δ^{(N-1)/N²} / Π_{i<j}(Λ_iΛ_j) · det(∫_{γ_i} μ_{p_j}^Λ) / Δ(p), and the
ζ-determinant variant without a p-set. The normalized components
f̄_Λ = Δ^{-(N-1)/N²} f_Λ carry no fractional power and are what the KZ and
singlet checks work with.
"""

import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from itertools import combinations
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from mpmath import mp
from sympy import Rational, binomial
from tqdm import tqdm

from . import config
from .algebra import OrderedPartition, discriminant, partition_denominator, vandermonde
from .curve import CurveSpec
from .differentials import Mu, Zeta
from .errors import (DegenerateVandermonde, GenusTooSmall, InvalidIndex, PartitionOverflow,
                     StepTooLarge)
from .homology import IntersectionData, build_intersection_data, regenerate
from .periods import PeriodData, build_periods


def partition_count(N: int, m: int) -> int:
    return math.factorial(N * m) // math.factorial(m) ** N


def enumerate_partitions(N: int, m: int) -> List[OrderedPartition]:
    """All ordered partitions of 1..Nm into N blocks of m, lexicographic by blocks"""
    count = partition_count(N, m)
    if count > config.MAX_PARTITIONS:
        raise PartitionOverflow(f"{count} partitions for N={N}, m={m} exceeds {config.MAX_PARTITIONS}")
    out = []

    def grow(prefix, remaining):
        if not remaining:
            out.append(OrderedPartition(tuple(prefix)))
            return
        for block in combinations(remaining, m):
            rest = tuple(i for i in remaining if i not in block)
            grow(prefix + [block], rest)

    grow([], tuple(range(1, N * m + 1)))
    return out


def principal_power(x, exponent: Rational):
    """exp(exponent · Log x) on the principal branch"""
    return mp.exp(mp.mpf(exponent.p) / exponent.q * mp.log(x))


def delta_exponent(N: int) -> Rational:
    return Rational(N - 1, N * N)


# Cycle choice

def parse_cycle_ref(ref: str) -> Tuple[str, int]:
    """'A3' / 'B1' / 'g4' (elementary loop) -> (kind, 1-based index)"""
    ref = ref.strip()
    kind, digits = ref[:1], ref[1:]
    if kind not in ('A', 'B', 'g') or not digits.isdigit() or int(digits) < 1:
        raise InvalidIndex(f"bad cycle reference '{ref}'")
    return kind, int(digits)


def cycle_row(periods: PeriodData, ref: str) -> np.ndarray:
    kind, i = parse_cycle_ref(ref)
    if kind == 'g':
        n = len(periods.intersection.cycles)
        if i > n:
            raise GenusTooSmall(f"only {n} elementary loops, asked for g{i}")
        row = np.zeros(n, dtype=np.int64)
        row[i - 1] = 1
        return row
    if i > periods.genus:
        raise GenusTooSmall(f"only {periods.genus} {kind}-cycles, asked for {kind}{i}")
    return periods.cycle_rows(kind)[i - 1]


def default_cycles(spec: CurveSpec) -> List[str]:
    return [f"A{i}" for i in range(1, spec.L + 1)]


def default_pset(spec: CurveSpec) -> List[int]:
    return list(range(1, spec.L + 1))


@dataclass
class SolverContext:
    """Curve, canonical basis and periods, reusable across λ perturbations"""

    spec: CurveSpec
    intersection: IntersectionData
    periods: PeriodData
    workers: int = config.MAX_WORKERS

    @classmethod
    def build(cls, spec: CurveSpec, workers: int = config.MAX_WORKERS) -> 'SolverContext':
        with mp.workprec(spec.precision_bits):
            data = build_intersection_data(spec)
            periods = build_periods(spec, data, workers=workers)
            return cls(spec, periods.intersection, periods, workers)

    def at(self, lambdas: Sequence[Any]) -> 'SolverContext':
        """Same cycle codes and basis transform at new λ"""
        spec = self.spec.with_lambdas(lambdas)
        with mp.workprec(spec.precision_bits):
            data = regenerate(spec, self.intersection)
            periods = build_periods(spec, data, workers=self.workers, orient=False)
            return SolverContext(spec, data, periods, self.workers)


@dataclass
class SolutionVector:
    """
    f_Λ per partition (keys are canonical partitions) plus the ζ-determinant variant

    Metadata records the cycles, the p-set, the precision and the branch used for
    Δ^{(N-1)/N²}.
    """

    entries: Dict[OrderedPartition, Any]
    zeta_entries: Dict[OrderedPartition, Any]
    fbar: Dict[OrderedPartition, Any]
    disagreement: Any
    metadata: Dict[str, Any] = field(default_factory=dict)

    def value(self, part: OrderedPartition):
        return self.entries[part.canonical()]

    def normalized(self, part: OrderedPartition):
        return self.fbar[part.canonical()]

    def partitions(self) -> List[OrderedPartition]:
        return list(self.entries)


def _check_pset(spec: CurveSpec, p_set: Sequence[int]) -> None:
    if len(p_set) != spec.L:
        raise InvalidIndex(f"p-set needs {spec.L} indices, got {len(p_set)}")
    for p in p_set:
        if not 1 <= p <= spec.degree:
            raise InvalidIndex(f"p = {p} outside 1..{spec.degree}")
    if len(set(p_set)) != len(p_set):
        raise DegenerateVandermonde(f"repeated index in p-set {list(p_set)}")


def _components(spec: CurveSpec, periods: Optional[PeriodData], part: OrderedPartition,
                moments: Sequence[Sequence[Any]], p_set: Sequence[int]) -> Tuple[Any, Any]:
    """(det ∫μ / Δ(p), det ∫ζ) for one partition; the empty determinant is 1"""
    L = spec.L
    if L == 0:
        return mp.mpc(1), mp.mpc(1)
    mu = mp.matrix(L, L)
    zeta = mp.matrix(L, L)
    for i, mom in enumerate(moments):
        for k, p in enumerate(p_set):
            mu[i, k] = periods.period_of(Mu(part, p), mom)
        for j in range(1, L + 1):
            zeta[i, j - 1] = periods.period_of(Zeta(part, j), mom)
    return mp.det(mu) / vandermonde(spec.lambdas, p_set), mp.det(zeta)


def solve_integral(spec: CurveSpec, periods: Optional[PeriodData], cycle_indices: Optional[Sequence[str]] = None,
                   p_set: Optional[Sequence[int]] = None, precision_bits: Optional[int] = None,
                   workers: int = config.MAX_WORKERS) -> SolutionVector:
    """f_Λ for every partition from the μ determinant, with the ζ determinant alongside"""
    cycle_indices = list(cycle_indices) if cycle_indices is not None else default_cycles(spec)
    p_set = list(p_set) if p_set is not None else default_pset(spec)
    if len(cycle_indices) != spec.L:
        raise GenusTooSmall(f"need L = {spec.L} cycles, got {len(cycle_indices)}")
    if len(set(cycle_indices)) != len(cycle_indices):
        raise InvalidIndex(f"repeated cycle in {cycle_indices}")
    _check_pset(spec, p_set)
    bits = precision_bits or spec.precision_bits
    with mp.workprec(bits):
        rows = [cycle_row(periods, ref) for ref in cycle_indices]
        moments = [periods.combine(row) for row in rows]
        parts = enumerate_partitions(spec.N, spec.m)
        delta = discriminant(spec.lambdas)
        log_delta = mp.log(delta)
        prefactor = principal_power(delta, delta_exponent(spec.N))
        first = [None] * len(parts)
        second = [None] * len(parts)
        with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
            futures = {executor.submit(_components, spec, periods, part, moments, p_set): i
                       for i, part in enumerate(parts)}
            with tqdm(total=len(parts), desc="Partitions", disable=not config.LOG_PROGRESS) as pbar:
                for future in as_completed(futures):
                    index = futures[future]
                    first[index], second[index] = future.result()
                    pbar.update(1)
        entries, zeta_entries, fbar = {}, {}, {}
        worst = mp.mpf(0)
        for part, a, b in zip(parts, first, second):
            denom = partition_denominator(spec.lambdas, part)
            key = part.canonical()
            fbar[key] = a / denom
            entries[key] = prefactor * a / denom
            zeta_entries[key] = prefactor * b / denom
            scale = max(abs(entries[key]), abs(zeta_entries[key]))
            if scale:
                worst = max(worst, abs(entries[key] - zeta_entries[key]) / scale)
        metadata = {
            "cycles": cycle_indices,
            "p_set": p_set,
            "precision_bits": bits,
            "delta_branch": "principal Log Δ",
            "log_delta": log_delta,
            "orientation_flipped": periods.flipped,
        }
        return SolutionVector(entries, zeta_entries, fbar, worst, metadata)


def normalized_solution(context: SolverContext, cycle_indices: Optional[Sequence[str]] = None,
                        p_set: Optional[Sequence[int]] = None) -> Dict[OrderedPartition, Any]:
    sol = solve_integral(context.spec, context.periods, cycle_indices, p_set, workers=context.workers)
    return sol.fbar


def kz_rhs(spec: CurveSpec, fbar: Dict[OrderedPartition, Any], part: OrderedPartition, p: int):
    """-(1/N) Σ_{j∉Λ_i} f̄_Λ/(λ_p-λ_j) + (1/N) Σ_{j∉Λ_i} f̄_{Λ^(pj)}/(λ_p-λ_j), p ∈ Λ_i"""
    block = part.block(part.block_of(p))
    lp = spec.lam(p)
    total = mp.mpc(0)
    own = fbar[part.canonical()]
    for j in range(1, spec.degree + 1):
        if j in block:
            continue
        d = lp - spec.lam(j)
        total += (fbar[part.swap(p, j).canonical()] - own) / d
    return total / spec.N


def kz_residual(spec: CurveSpec, context: SolverContext, p: int, h=None,
                precision_bits: Optional[int] = None,
                cycle_indices: Optional[Sequence[str]] = None,
                p_set: Optional[Sequence[int]] = None):
    """
    Max over Λ of |∂f̄_Λ/∂λ_p - RHS| relative to the largest term

    The derivative is a central difference Richardson-combined over h and h/2,
    with the cycles regenerated from their codes at each shifted λ.
    """
    if not 1 <= p <= spec.degree:
        raise InvalidIndex(f"branch index {p} outside 1..{spec.degree}")
    bits = precision_bits or spec.precision_bits
    with mp.workprec(bits):
        h = mp.mpf(h) if h is not None else spec.min_distance * config.KZ_STEP_FRACTION
        if h >= spec.clearance:
            raise StepTooLarge(f"step {mp.nstr(h, 5)} is not below the path clearance {mp.nstr(spec.clearance, 5)}")
        base = normalized_solution(context, cycle_indices, p_set)

        def shifted(delta):
            lams = list(spec.lambdas)
            lams[p - 1] = lams[p - 1] + delta
            return normalized_solution(context.at(lams), cycle_indices, p_set)

        plus, minus = shifted(h), shifted(-h)
        plus2, minus2 = shifted(h / 2), shifted(-h / 2)
        worst = mp.mpf(0)
        scale = mp.mpf(0)
        for key in base:
            d1 = (plus[key] - minus[key]) / (2 * h)
            d2 = (plus2[key] - minus2[key]) / h
            lhs = (4 * d2 - d1) / 3
            rhs = kz_rhs(spec, base, key, p)
            worst = max(worst, abs(lhs - rhs))
            scale = max(scale, abs(lhs), abs(rhs))
        return worst / scale if scale else worst


def singlet_residual(spec: CurveSpec, solution: SolutionVector):
    """
    max over Λ, ordered block pairs (a, b) and q ∈ Λ_b of
    |f̄_Λ + Σ_{x∈Λ_a} f̄_{Λ^(xq)}|, relative to max |f̄|
    """
    with mp.workprec(solution.metadata.get("precision_bits", spec.precision_bits)):
        fbar = solution.fbar
        top = max(abs(v) for v in fbar.values())
        worst = mp.mpf(0)
        for part in fbar:
            for a in range(1, spec.N + 1):
                for b in range(1, spec.N + 1):
                    if a == b:
                        continue
                    for q in part.block(b):
                        total = fbar[part]
                        for x in part.block(a):
                            total += fbar[part.swap(x, q).canonical()]
                        worst = max(worst, abs(total))
        return worst / top


def dim_counts(N: int, m: int) -> Dict[str, Any]:
    """
    mult(0, V^{⊗Nm}), I(N, m) = C(Nm-2, (N-1)m-1) and their ratio

    For N = 2 the bilinear-identity corrected count I(2, m) - C(2m-2, m-3) is
    reported as well; it equals mult.
    """
    if N < 2 or m < 1:
        raise InvalidIndex(f"need N >= 2 and m >= 1, got N={N}, m={m}")
    hooks = 1
    for k in range(N):
        for j in range(m):
            hooks *= m + k - j
    mult = math.factorial(N * m) // hooks
    count = int(binomial(N * m - 2, (N - 1) * m - 1))
    out = {"mult": mult, "I": count, "ratio": Rational(mult, count)}
    if N == 2:
        out["corrected_I"] = count - (int(binomial(2 * m - 2, m - 3)) if m >= 3 else 0)
    return out


def solution_rank(solutions: Sequence[SolutionVector], tol: float = 1e-10) -> Dict[str, Any]:
    """Numerical rank of a family of solution vectors (not certified)"""
    if not solutions:
        return {"rank": 0, "singular_values": []}
    keys = sorted(solutions[0].entries, key=lambda k: k.blocks)
    M = np.array([[complex(s.fbar[k]) for k in keys] for s in solutions])
    values = np.linalg.svd(M, compute_uv=False)
    top = values[0] if len(values) else 0.0
    rank = int(np.sum(values > tol * top)) if top else 0
    return {"rank": rank, "singular_values": [float(v) for v in values]}


def independent_cycle_sets(spec: CurveSpec, limit: int = 8) -> List[List[str]]:
    """L-subsets of A- and B-cycles, lexicographic, at most `limit`"""
    refs = [f"A{i}" for i in range(1, spec.genus + 1)] + [f"B{i}" for i in range(1, spec.genus + 1)]
    out = []
    for combo in combinations(refs, spec.L):
        out.append(list(combo))
        if len(out) >= limit:
            break
    return out


def cycle_covariance_check(spec: CurveSpec, periods: PeriodData,
                           cycle_indices: Optional[Sequence[str]] = None,
                           p_set: Optional[Sequence[int]] = None) -> Dict[str, Any]:
    """
    Replace the chosen cycles by U·γ (U unitriangular with -1 in the corner,
    plus a null combination on each) and compare f_Λ.

    Returns the common ratio (expected det U = -1) and its relative spread.
    """
    cycle_indices = list(cycle_indices) if cycle_indices is not None else default_cycles(spec)
    with mp.workprec(spec.precision_bits):
        base = solve_integral(spec, periods, cycle_indices, p_set)
        rows = [cycle_row(periods, ref) for ref in cycle_indices]
        L = len(rows)
        null = periods.intersection.null_rows
        extra = null[0] if len(null) else np.zeros_like(rows[0])
        mixed = []
        for i in range(L):
            row = -rows[i] if i == 0 else rows[i].copy()
            for j in range(i + 1, L):
                row = row + rows[j]
            mixed.append(row + extra)
        moments = [periods.combine(row) for row in mixed]
        p_set = list(p_set) if p_set is not None else default_pset(spec)
        ratios = []
        for part in enumerate_partitions(spec.N, spec.m):
            a, _ = _components(spec, periods, part, moments, p_set)
            new = a / partition_denominator(spec.lambdas, part)
            ratios.append(new / base.fbar[part.canonical()])
        mean = sum(ratios, mp.mpc(0)) / len(ratios)
        spread = max(abs(r - mean) for r in ratios) / abs(mean)
        return {"ratio": mean, "spread": spread, "expected": -1}


def pset_spread(spec: CurveSpec, periods: PeriodData, p_sets: Sequence[Sequence[int]],
                cycle_indices: Optional[Sequence[str]] = None):
    """Max relative difference of f_Λ across p-sets"""
    with mp.workprec(spec.precision_bits):
        sols = [solve_integral(spec, periods, cycle_indices, ps) for ps in p_sets]
        worst = mp.mpf(0)
        for key, ref in sols[0].entries.items():
            for other in sols[1:]:
                worst = max(worst, abs(other.entries[key] - ref) / abs(ref))
        return worst
