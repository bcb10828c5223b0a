"""
Differential forms on the Z_N curve

Every form exposes coefficient(spec, z, logs): its value relative to dz (or
√dz for half-forms) at the point whose factor logs are `logs`. The same
coefficient functions serve plain evaluation, quadrature and local expansions.
"""

from dataclasses import dataclass
from typing import Any, List, Sequence, Tuple, Union

from mpmath import mp
from sympy import Rational

from .algebra import (OrderedPartition, exact_part_coefficient, g_inside, mu_coefficient,
                      poly_eval, spin_exponent, spin_labels, zeta_polynomial)
from .curve import (CurveSpec, SheetPoint, branch_root, canonical_logs, local_factor,
                    local_value_at_branch, s_from_logs)
from .errors import CoincidentProjection, InvalidIndex, PoleHit


def _check_partition(spec: CurveSpec, part: OrderedPartition) -> None:
    if part.N != spec.N or part.m != spec.m:
        raise InvalidIndex(f"partition shape {part.N}x{part.m} does not match curve {spec.N}x{spec.m}")


def _check_branch(spec: CurveSpec, p: int) -> None:
    if not 1 <= p <= spec.degree:
        raise InvalidIndex(f"branch index {p} outside 1..{spec.degree}")


def _near_branch(spec: CurveSpec, z) -> bool:
    return any(abs(z - l) < spec.clearance for l in spec.lambdas)


@dataclass(frozen=True)
class Holo:
    """w^(α)_β = z^{β-1} dz / s^α"""

    alpha: int
    beta: int
    weight = 1

    def validate(self, spec: CurveSpec) -> 'Holo':
        if not (1 <= self.alpha <= spec.N - 1 and 1 <= self.beta <= self.alpha * spec.m - 1):
            raise InvalidIndex(f"holomorphic form ({self.alpha}, {self.beta}) out of range")
        return self

    def coefficient(self, spec: CurveSpec, z, logs):
        return z ** (self.beta - 1) * mp.exp(-self.alpha * sum(logs, mp.mpc(0)) / spec.N)


@dataclass(frozen=True)
class Mu:
    """μ_p^Λ"""

    partition: OrderedPartition
    p: int
    weight = 1

    def validate(self, spec: CurveSpec) -> 'Mu':
        _check_partition(spec, self.partition)
        _check_branch(spec, self.p)
        return self

    def coefficient(self, spec: CurveSpec, z, logs):
        return mu_coefficient(spec.lambdas, self.partition, self.p, z) / s_from_logs(spec, logs)


@dataclass(frozen=True)
class Zeta:
    """ζ_j^Λ"""

    partition: OrderedPartition
    j: int
    weight = 1

    def validate(self, spec: CurveSpec) -> 'Zeta':
        _check_partition(spec, self.partition)
        if not 1 <= self.j <= spec.L:
            raise InvalidIndex(f"zeta index j={self.j} outside 1..{spec.L}")
        return self

    def coefficient(self, spec: CurveSpec, z, logs):
        poly = zeta_polynomial(spec.lambdas, self.partition, self.j)
        return poly_eval(poly, z) / s_from_logs(spec, logs)


@dataclass(frozen=True)
class ExactPart:
    """N d(s^{N-1} / (z - λ_p))"""

    p: int
    weight = 1

    def validate(self, spec: CurveSpec) -> 'ExactPart':
        _check_branch(spec, self.p)
        return self

    def coefficient(self, spec: CurveSpec, z, logs):
        return exact_part_coefficient(spec.lambdas, spec.N, self.p, z) / s_from_logs(spec, logs)


@dataclass(frozen=True)
class SpinF:
    """
    Spin function f_l(x, Λ^±) = Π (z - λ_i)^{q_l(k_i)} √dz

    sign = -1 uses the block labels of Λ⁻, so SpinF(-l, Λ, -1) is f_{-l}(x, Λ⁻).
    """

    l: Rational
    partition: OrderedPartition
    sign: int = 1
    weight = Rational(1, 2)

    def validate(self, spec: CurveSpec) -> 'SpinF':
        _check_partition(spec, self.partition)
        if (Rational(self.l) - Rational(spec.N - 1, 2)).q != 1:
            raise InvalidIndex(f"spin label {self.l} not in ℒ + Z for N={spec.N}")
        return self

    def exponents(self) -> Tuple[Rational, ...]:
        part = self.partition if self.sign > 0 else self.partition.minus()
        N = part.N
        return tuple(spin_exponent(self.l, k, N) for k in part.k())

    def coefficient(self, spec: CurveSpec, z, logs):
        total = mp.mpc(0)
        for q, L in zip(self.exponents(), logs):
            total += mp.mpf(q.p) / q.q * L
        return mp.exp(total)


DifferentialRef = Union[Holo, Mu, Zeta, ExactPart, SpinF]


def holomorphic_basis(spec: CurveSpec) -> List[Holo]:
    """Holo(α, β), α ascending then β; g forms"""
    return [Holo(a, b) for a in range(1, spec.N) for b in range(1, a * spec.m)]


def parse_form(spec: CurveSpec, text: str, partition: OrderedPartition = None) -> DifferentialRef:
    """Parse CLI strings like 'mu:p=4', 'zeta:j=2', 'holo:a=1,b=1', 'exact:p=1'"""
    kind, _, args = text.partition(':')
    params = {}
    for item in filter(None, args.split(',')):
        key, _, value = item.partition('=')
        params[key.strip()] = value.strip()
    try:
        if kind == 'holo':
            return Holo(int(params['a']), int(params['b'])).validate(spec)
        if kind == 'exact':
            return ExactPart(int(params['p'])).validate(spec)
        if partition is None:
            raise InvalidIndex(f"form '{text}' needs a partition")
        if kind == 'mu':
            return Mu(partition, int(params['p'])).validate(spec)
        if kind == 'zeta':
            return Zeta(partition, int(params['j'])).validate(spec)
        if kind == 'spin':
            return SpinF(Rational(params['l']), partition, int(params.get('sign', 1))).validate(spec)
    except (KeyError, ValueError) as e:
        raise InvalidIndex(f"cannot parse form '{text}': {e}")
    raise InvalidIndex(f"unknown form kind '{kind}'")


def eval_form(spec: CurveSpec, form: DifferentialRef, x: SheetPoint):
    """Coefficient relative to dz (√dz for spin functions) at x"""
    form.validate(spec)
    with mp.workprec(spec.precision_bits):
        if not isinstance(form, SpinF) and _near_branch(spec, x.z):
            raise PoleHit(f"{form} evaluated within clearance of a branch point")
        return form.coefficient(spec, x.z, canonical_logs(spec, x.z, x.sheet))


def exact_relation_defect(spec: CurveSpec, part: OrderedPartition, p: int, z, sheet: int = 0):
    """Σ_j ζ_j λ_p^{L-j} - μ_p - N d(s^{N-1}/(z - λ_p)) at (z, sheet)"""
    _check_partition(spec, part)
    _check_branch(spec, p)
    with mp.workprec(spec.precision_bits):
        z = mp.mpc(z)
        if _near_branch(spec, z):
            raise PoleHit(f"z = {mp.nstr(z, 8)} within clearance of a branch point")
        lams = spec.lambdas
        lp = spec.lam(p)
        zeta_sum = sum((poly_eval(zeta_polynomial(lams, part, j), z) * lp ** (spec.L - j)
                        for j in range(1, spec.L + 1)), mp.mpc(0))
        coeff = (zeta_sum - mu_coefficient(lams, part, p, z)
                 - exact_part_coefficient(lams, spec.N, p, z))
        return coeff / s_from_logs(spec, canonical_logs(spec, z, sheet))


def _lemma_labels(N: int, r: int) -> Tuple[Rational, Rational, Rational, Rational]:
    base = -Rational(N - 1, 2)
    r_minus = N - 1 - r
    return base + r, base + N - r, base + r_minus, base + r - 1


def eval_spin_product_identities(spec: CurveSpec, part: OrderedPartition, p: int,
                                 x: SheetPoint) -> Tuple[Any, Any]:
    """
    Defects of the two spin-function product identities for p ∈ Λ_r

    Returns:
        (value-at-Q_p defect, pointwise defect at x), both relative to the right-hand side
    """
    _check_partition(spec, part)
    _check_branch(spec, p)
    N = spec.N
    r = part.block_of(p)
    minus = part.minus()
    l_a, l_b, l_c, l_d = _lemma_labels(N, r)
    with mp.workprec(spec.precision_bits):
        block = part.block(r)
        at_branch = (local_value_at_branch(spec, p, SpinF(l_a, minus))
                     * local_value_at_branch(spec, p, SpinF(l_b, part)))
        expected = N * branch_root(spec, p) / g_inside(spec.lambdas, block, spec.lam(p), skip=(p,))
        logs = canonical_logs(spec, x.z, x.sheet)
        pointwise = SpinF(l_c, part).coefficient(spec, x.z, logs) * SpinF(l_d, minus).coefficient(spec, x.z, logs)
        rhs = g_inside(spec.lambdas, block, x.z) / s_from_logs(spec, logs)
        return abs(at_branch - expected) / abs(expected), abs(pointwise - rhs) / abs(rhs)


def szego_algebraic(spec: CurveSpec, part: OrderedPartition, x: SheetPoint, y: SheetPoint):
    """(1/N) Σ_l f_l(x, Λ) f_{-l}(y, Λ⁻) / (z(y) - z(x))"""
    _check_partition(spec, part)
    with mp.workprec(spec.precision_bits):
        if abs(y.z - x.z) <= spec.clearance:
            raise CoincidentProjection("z(x) = z(y)")
        minus = part.minus()
        lx = canonical_logs(spec, x.z, x.sheet)
        ly = canonical_logs(spec, y.z, y.sheet)
        total = mp.mpc(0)
        for l in spin_labels(spec.N):
            total += SpinF(l, part).coefficient(spec, x.z, lx) * SpinF(-l, minus).coefficient(spec, y.z, ly)
        return total / (spec.N * (y.z - x.z))


def szego_at_branch(spec: CurveSpec, part: OrderedPartition, x: SheetPoint, p: int):
    """R(x, Q_p | e_Λ): the y → Q_p specialization of the algebraic kernel"""
    _check_partition(spec, part)
    with mp.workprec(spec.precision_bits):
        minus = part.minus()
        lx = canonical_logs(spec, x.z, x.sheet)
        total = mp.mpc(0)
        for l in spin_labels(spec.N):
            at_q = local_value_at_branch(spec, p, SpinF(-l, minus))
            total += SpinF(l, part).coefficient(spec, x.z, lx) * at_q
        return total / (spec.N * (spec.lam(p) - x.z))


def szego_factorization_defect(spec: CurveSpec, part: OrderedPartition, p: int, x: SheetPoint):
    """Relative defect of μ_p^Λ(x) = N c_p^{N-1} R(x,Q_p|e_Λ) R(x,Q_p|e_{Λ⁻})"""
    with mp.workprec(spec.precision_bits):
        mu = eval_form(spec, Mu(part, p), x)
        rr = szego_at_branch(spec, part, x, p) * szego_at_branch(spec, part.minus(), x, p)
        return abs(mu - spec.N * branch_root(spec, p) ** (spec.N - 1) * rr) / abs(mu)


def residue_samples(spec: CurveSpec, part: OrderedPartition, p: int, samples: int = 32):
    """
    Contour integrals of μ_p^Λ around every other branch point, in the t coordinate

    Returns max |∮| over q ≠ p; μ_p^Λ is regular there so the value is zero to precision.
    """
    with mp.workprec(spec.precision_bits):
        worst = mp.mpf(0)
        form = Mu(part, p)
        for q in range(1, spec.degree + 1):
            if q == p:
                continue
            lq = spec.lam(q)
            nearest = min(abs(lq - l) for j, l in enumerate(spec.lambdas, start=1) if j != q)
            rho = nearest ** (mp.mpf(1) / spec.N) / 4
            total = mp.mpc(0)
            for k in range(samples):
                t = rho * mp.expj(2 * mp.pi * (k + mp.mpf(1) / 2) / samples)
                total += local_factor(spec, q, form, t) * t
            worst = max(worst, abs(total / samples))
        return worst
