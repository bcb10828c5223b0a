"""
Exact verification of the rational-function identities behind the KZ proof

Every identity is reduced to a formal combination Σ c_a(z, λ) · dz/s^{k_a} whose
coefficients are exact rationals at a point, and checked by evaluating it at
random rational points (randomized polynomial identity testing). Relations that
hold modulo exact forms are evaluated on the polynomial representatives
Σ_j ζ_j λ_p^{L-j} of the μ_p.
"""

import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field as dataclass_field
from itertools import combinations, permutations
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from sympy import QQ, Rational
from sympy.polys.fields import field
from sympy.polys.matrices import DomainMatrix
from tqdm import tqdm

from . import config
from .algebra import (OrderedPartition, exact_part_coefficient, f_derivative, f_value, fprime_at,
                      g_inside, g_outside, mu_coefficient, mu_representative, pair_exponent,
                      poly_eval, product, spin_exponent, spin_labels, zeta_polynomial)
from .differentials import SpinF
from .errors import BadIndices, DegenerateSampling


def _q(r: Rational):
    return QQ(int(r.p), int(r.q))


@dataclass(frozen=True)
class Point:
    """Rational sample (λ_1..λ_Nm, z)"""

    lams: Tuple[Any, ...]
    z: Any

    def lam(self, i: int):
        return self.lams[i - 1]

    def to_json(self) -> Dict[str, Any]:
        return {"lambdas": [str(l) for l in self.lams], "z": str(self.z)}


# Formal terms; value() is the coefficient of dz/s^weight

def s_log_derivative(N: int, z, lam_q):
    """(∂s/∂λ_q) / s"""
    return -QQ(1, N) / (z - lam_q)


def _evaluate_at(element, value):
    numer, denom = element.numer, element.denom
    t = numer.ring.gens[0]
    return numer.evaluate(t, value) / denom.evaluate(t, value)


def lambda_derivative(fn: Callable[[Sequence[Any], Any], Any], pt: Point, q: int):
    """∂/∂λ_q of fn(lams, z) at pt, through the univariate fraction field Q(t)"""
    K, t = field("t", QQ)
    lams = [t if i == q else K.ground_new(l) for i, l in enumerate(pt.lams, start=1)]
    return _evaluate_at(fn(lams, K.ground_new(pt.z)).diff(t), pt.lam(q))


@dataclass(frozen=True)
class MuTerm:
    partition: OrderedPartition
    p: int
    weight = 1

    def value(self, pt: Point, expr: 'FormExpr'):
        if expr.modulo_exact:
            return poly_eval(mu_representative(pt.lams, self.partition, self.p), pt.z)
        return mu_coefficient(pt.lams, self.partition, self.p, pt.z)


@dataclass(frozen=True)
class ZetaTerm:
    partition: OrderedPartition
    j: int
    weight = 1

    def value(self, pt: Point, expr: 'FormExpr'):
        return poly_eval(zeta_polynomial(pt.lams, self.partition, self.j), pt.z)


@dataclass(frozen=True)
class ExactTerm:
    """N d(s^{N-1}/(z - λ_p))"""

    p: int
    weight = 1

    def value(self, pt: Point, expr: 'FormExpr'):
        return exact_part_coefficient(pt.lams, expr.N, self.p, pt.z)


@dataclass(frozen=True)
class DerivMuTerm:
    """∂μ_p^Λ/∂λ_q with ∂s/∂λ_q = -s/(N(z - λ_q))"""

    partition: OrderedPartition
    p: int
    q: int
    weight = 1

    def value(self, pt: Point, expr: 'FormExpr'):
        part, p = self.partition, self.p
        dc = lambda_derivative(lambda lams, z: mu_coefficient(lams, part, p, z), pt, self.q)
        c = mu_coefficient(pt.lams, part, p, pt.z)
        return dc - c * s_log_derivative(expr.N, pt.z, pt.lam(self.q))


@dataclass(frozen=True)
class FunctionTerm:
    fn: Callable[[Point], Any]
    weight: int = 1
    label: str = ""

    def value(self, pt: Point, expr: 'FormExpr'):
        return self.fn(pt)


def _one(pt: Point):
    return 1


def _const(c):
    return lambda pt: c


@dataclass
class FormExpr:
    """Σ coefficient(pt) · term, expected to vanish identically"""

    N: int
    degree: int
    modulo_exact: bool = False
    terms: List[Tuple[Callable[[Point], Any], Any]] = dataclass_field(default_factory=list)

    def add(self, coeff: Callable[[Point], Any], term) -> 'FormExpr':
        self.terms.append((coeff, term))
        return self

    def sub(self, coeff: Callable[[Point], Any], term) -> 'FormExpr':
        return self.add(lambda pt: -coeff(pt), term)

    def evaluate(self, pt: Point) -> Dict[int, Any]:
        totals: Dict[int, Any] = {}
        for coeff, term in self.terms:
            c = coeff(pt)
            if c == 0:
                continue
            totals[term.weight] = totals.get(term.weight, 0) + c * term.value(pt, self)
        return totals

    def is_zero_at(self, pt: Point) -> Tuple[bool, Dict[int, Any]]:
        values = self.evaluate(pt)
        return all(v == 0 for v in values.values()), values


def mutate(expr: FormExpr) -> FormExpr:
    """Adds one more copy of the first term (a unit coefficient change)"""
    if not expr.terms:
        return FormExpr(expr.N, expr.degree, expr.modulo_exact, [(_one, FunctionTerm(_one, 0, "one"))])
    first = expr.terms[0][1]
    return FormExpr(expr.N, expr.degree, expr.modulo_exact, list(expr.terms) + [(_one, first)])


# Index bookkeeping for Λ_r = {i^r_1..i^r_m}

@dataclass(frozen=True)
class _Indices:
    N: int
    m: int
    part: OrderedPartition

    def i(self, r: int, l: int) -> int:
        return self.part.element(r, l)

    @property
    def n(self) -> int:
        """i^N_m"""
        return self.i(self.N, self.m)

    @property
    def im(self) -> int:
        """i^{N-1}_m"""
        return self.i(self.N - 1, self.m)

    @property
    def K(self) -> List[int]:
        return [self.i(r, l) for r in range(1, self.N) for l in range(1, self.m + 1)
                if (r, l) != (self.N - 1, self.m)]

    def swap(self, p: int) -> OrderedPartition:
        """Λ^(i^N_m p)"""
        return self.part.swap(self.n, p)

    def outside(self, r: int) -> List[int]:
        block = set(self.part.block(r))
        return [j for j in range(1, self.N * self.m + 1) if j not in block]


def standard_partition(N: int, m: int) -> OrderedPartition:
    return OrderedPartition(tuple(tuple(range((r - 1) * m + 1, r * m + 1)) for r in range(1, N + 1)))


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise BadIndices(message)


def _lagrange(pt: Point, x: int, k: int, nodes: Sequence[int]):
    """Π_{j∈nodes, j≠k} (λ_x - λ_j)/(λ_k - λ_j)"""
    return product((pt.lam(x) - pt.lam(j)) / (pt.lam(k) - pt.lam(j)) for j in nodes if j != k)


def _A(ix: _Indices, pt: Point, r: int):
    """A_r"""
    n = pt.lam(ix.n)
    num = product(n - pt.lam(ix.i(r, s)) for s in range(1, ix.m + 1))
    den = product(n - pt.lam(ix.i(ix.N, s)) for s in range(1, ix.m))
    return num / den


def _B(ix: _Indices, pt: Point, r: int, l: int, k: int, reading: str = "literal"):
    block = [ix.i(r, s) for s in range(1, ix.m + 1)]
    if reading == "shifted" and r == ix.N - 1 and ix.m >= 2:
        block[ix.m - 1] = block[ix.m - 2]
    ik = pt.lam(ix.i(ix.N - 1, k))
    num = product(ik - pt.lam(block[s - 1]) for s in range(1, ix.m + 1) if s != l)
    den = product(ik - pt.lam(ix.i(ix.N, s)) for s in range(1, ix.m))
    return 1 - (pt.lam(ix.n) - pt.lam(ix.i(r, l))) / _A(ix, pt, r) * num / den


def _check_rl(ix: _Indices, r: int, l: int, top: int) -> None:
    _require(1 <= r <= top and 1 <= l <= ix.m, f"(r, l) = ({r}, {l}) outside 1..{top} x 1..{ix.m}")


# Relations between μ forms of neighbouring partitions

def _derivative_chain(step: str):
    def build(ix: _Indices, params: Dict[str, Any]) -> FormExpr:
        r, l = params["r"], params["l"]
        _check_rl(ix, r, l, ix.N - 1)
        N, n, p = ix.N, ix.n, ix.i(r, l)
        part = ix.part
        block = part.block(r)
        expr = FormExpr(N, N * ix.m).add(_one, DerivMuTerm(part, p, n))

        def lead(pt):
            return g_outside(pt.lams, block, pt.lam(p)) * g_inside(pt.lams, block, pt.z, skip=(p,))

        if step == "f11":
            expr.sub(lambda pt: -1 / (pt.lam(p) - pt.lam(n)), MuTerm(part, p))
            expr.sub(_one, FunctionTerm(lambda pt: QQ(1, N) * lead(pt) / ((pt.z - pt.lam(p)) * (pt.z - pt.lam(n)))))
            return expr
        expr.sub(lambda pt: (1 - QQ(1, N)) / (pt.lam(n) - pt.lam(p)), MuTerm(part, p))
        if step == "f12":
            expr.sub(_one, FunctionTerm(lambda pt: QQ(1, N) / (pt.lam(n) - pt.lam(p)) * lead(pt) / (pt.z - pt.lam(n))))
            return expr
        others = [j for j in ix.outside(r) if j != n]
        expr.add(lambda pt: QQ(1, N) / (pt.lam(n) - pt.lam(p)) *
                 product((pt.lam(p) - pt.lam(j)) / (pt.lam(n) - pt.lam(j)) for j in others),
                 MuTerm(ix.swap(p), n))
        return expr
    return build


def _rel2(ix: _Indices, params: Dict[str, Any]) -> FormExpr:
    r, l, l2 = params["r"], params["l"], params["l2"]
    _check_rl(ix, r, l, ix.N - 1)
    _check_rl(ix, r, l2, ix.N - 1)
    _require(l != l2, "rel2 needs l != l'")
    N, m, n, im = ix.N, ix.m, ix.n, ix.im
    a, b = ix.i(r, l), ix.i(r, l2)
    part = ix.part
    expr = FormExpr(N, N * m).add(_one, MuTerm(ix.swap(b), a)).sub(_one, MuTerm(part, a))
    others = [j for j in ix.outside(r) if j != n]
    rest = [ix.i(r, s) for s in range(1, m + 1) if s not in (l, l2)]
    for k in range(1, m):
        ik = ix.i(N - 1, k)
        skip = {n, im, ik}

        def weight(pt, ik=ik, skip=skip):
            num = (product(pt.lam(a) - pt.lam(j) for j in others) *
                   product(pt.lam(ik) - pt.lam(s) for s in rest))
            den = product(pt.lam(ik) - pt.lam(j) for j in range(1, N * m + 1) if j not in skip)
            return (pt.lam(n) - pt.lam(b)) / (pt.lam(n) - pt.lam(im)) * num / den

        expr.add(weight, MuTerm(part, ik))
        expr.sub(weight, MuTerm(ix.swap(im), ik))
    return expr


def _rel3(ix: _Indices, params: Dict[str, Any]) -> FormExpr:
    l, l2 = params["l"], params["l2"]
    _check_rl(ix, ix.N - 1, l, ix.N - 1)
    _check_rl(ix, ix.N - 1, l2, ix.N - 1)
    _require(l != l2, "rel3 needs l != l'")
    N, m, n, im = ix.N, ix.m, ix.n, ix.im
    a, b = ix.i(N - 1, l), ix.i(N - 1, l2)
    part = ix.part
    others = [j for j in ix.outside(N - 1) if j != n]

    def x(pt, i):
        return pt.lam(i)

    def c1(pt):
        return ((x(pt, im) - x(pt, b)) * (x(pt, n) - x(pt, a)) /
                ((x(pt, a) - x(pt, b)) * (x(pt, n) - x(pt, im))))

    def c2(pt):
        return ((x(pt, a) - x(pt, im)) * (x(pt, n) - x(pt, b)) /
                ((x(pt, a) - x(pt, b)) * (x(pt, n) - x(pt, im))))

    def c3(pt):
        lead = ((x(pt, b) - x(pt, im)) * (x(pt, n) - x(pt, b)) /
                ((x(pt, b) - x(pt, a)) * (x(pt, n) - x(pt, im))))
        return lead * product((x(pt, a) - x(pt, j)) / (x(pt, b) - x(pt, j)) for j in others)

    expr = FormExpr(N, N * m).add(_one, MuTerm(ix.swap(b), a))
    expr.sub(c1, MuTerm(part, a)).sub(c2, MuTerm(ix.swap(im), a))
    expr.add(c3, MuTerm(part, b)).sub(c3, MuTerm(ix.swap(im), b))
    return expr


def _interpolate_k(ix: _Indices, expr: FormExpr, target: int, sign: int = -1) -> FormExpr:
    """Adds sign · Σ_{k∈K} Π_{j∈K, j≠k} (λ_target - λ_j)/(λ_k - λ_j) μ_k^Λ"""
    K = ix.K
    for k in K:
        expr.add(lambda pt, k=k: sign * _lagrange(pt, target, k, K), MuTerm(ix.part, k))
    return expr


def _rel4(ix: _Indices, params: Dict[str, Any]) -> FormExpr:
    r, l = params["r"], params["l"]
    reading = params.get("reading", "literal")
    shift = params.get("b_shift", 0)
    _check_rl(ix, r, l, ix.N - 1)
    _require(reading in ("literal", "shifted"), f"unknown rel4 reading '{reading}'")
    N, m, n, im = ix.N, ix.m, ix.n, ix.im
    p = ix.i(r, l)
    K = ix.K
    expr = FormExpr(N, N * m, modulo_exact=True).add(_one, MuTerm(ix.swap(p), n))
    _interpolate_k(ix, expr, n)
    for k in range(1, m):
        ik = ix.i(N - 1, k)

        def weight(pt, k=k, ik=ik):
            return _lagrange(pt, n, ik, K) * (_B(ix, pt, r, l, k, reading) + shift)

        expr.add(weight, MuTerm(ix.part, ik))
        expr.sub(weight, MuTerm(ix.swap(im), ik))
    return expr


def _rel5(ix: _Indices, params: Dict[str, Any]) -> FormExpr:
    r, l = params["r"], params["l"]
    _check_rl(ix, r, l, ix.N)
    _require((r, l) != (ix.N, ix.m), "rel5 needs (r, l) != (N, m)")
    N, m, n = ix.N, ix.m, ix.n
    a = ix.i(r, l)
    swapped = ix.swap(a)
    K = ix.K
    expr = FormExpr(N, N * m, modulo_exact=True).add(_one, MuTerm(swapped, a))
    for k in K:
        if k == a:
            continue
        expr.sub(lambda pt, k=k: ((pt.lam(n) - pt.lam(a)) / (pt.lam(n) - pt.lam(k)) *
                                  _lagrange(pt, a, k, [j for j in K if j != a])), MuTerm(swapped, k))
    expr.sub(lambda pt: product((pt.lam(a) - pt.lam(j)) / (pt.lam(n) - pt.lam(j)) for j in K if j != a),
             MuTerm(swapped, n))
    return expr


def _prop5(ix: _Indices, params: Dict[str, Any]) -> FormExpr:
    p = params["p"]
    _require(1 <= p <= ix.N * ix.m, f"p={p} outside 1..{ix.N * ix.m}")
    L = (ix.N - 1) * ix.m - 1
    expr = FormExpr(ix.N, ix.N * ix.m)
    for j in range(1, L + 1):
        expr.add(lambda pt, j=j: pt.lam(p) ** (L - j), ZetaTerm(ix.part, j))
    return expr.sub(_one, MuTerm(ix.part, p)).sub(_one, ExactTerm(p))


# Spin-function product identities, raised to the 2N-th power

def _lemma_labels(N: int, r: int) -> Tuple[Rational, Rational, Rational, Rational]:
    base = -Rational(N - 1, 2)
    return base + r, base + N - r, base + (N - 1 - r), base + r - 1


def _spin_sums(ix: _Indices, p: int) -> Tuple[List[Rational], List[Rational], List[int]]:
    """Exponent sums of (z - λ_i) in the two spin products, and the membership of i in Λ_r"""
    N = ix.N
    r = ix.part.block_of(p)
    l_a, l_b, l_c, l_d = _lemma_labels(N, r)
    k_plus = ix.part.k()
    k_minus = ix.part.minus().k()
    at_branch = [spin_exponent(l_a, km, N) + spin_exponent(l_b, kp, N) for kp, km in zip(k_plus, k_minus)]
    pointwise = [spin_exponent(l_c, kp, N) + spin_exponent(l_d, km, N) for kp, km in zip(k_plus, k_minus)]
    inside = [1 if k == r else 0 for k in k_plus]
    return at_branch, pointwise, inside


def _integer(x: Rational) -> int:
    if x.q != 1:
        raise BadIndices(f"exponent {x} is not integral")
    return int(x.p)


def _lemma1_prod1(ix: _Indices, params: Dict[str, Any]) -> FormExpr:
    p = params["p"]
    _require(1 <= p <= ix.N * ix.m, f"p={p} outside 1..{ix.N * ix.m}")
    N = ix.N
    at_branch, _, _ = _spin_sums(ix, p)
    powers = [_integer(2 * N * e) for e in at_branch]
    block = ix.part.block(ix.part.block_of(p))

    def defect(pt):
        lp = pt.lam(p)
        lhs = product((lp - pt.lam(j)) ** powers[j - 1] for j in range(1, N * ix.m + 1) if j != p)
        rhs = fprime_at(pt.lams, p) ** 2 / g_inside(pt.lams, block, lp, skip=(p,)) ** (2 * N)
        return lhs - rhs

    return FormExpr(N, N * ix.m).add(_one, FunctionTerm(defect, 0, "prod1"))


def _lemma1_prod2(ix: _Indices, params: Dict[str, Any]) -> FormExpr:
    p = params["p"]
    _require(1 <= p <= ix.N * ix.m, f"p={p} outside 1..{ix.N * ix.m}")
    N = ix.N
    _, pointwise, _ = _spin_sums(ix, p)
    powers = [_integer(2 * N * e) for e in pointwise]
    block = ix.part.block(ix.part.block_of(p))

    def defect(pt):
        lhs = product((pt.z - l) ** e for l, e in zip(pt.lams, powers))
        return lhs - g_inside(pt.lams, block, pt.z) ** (2 * N) / f_value(pt.lams, pt.z) ** 2

    return FormExpr(N, N * ix.m).add(_one, FunctionTerm(defect, 0, "prod2"))


def _prod_exponents(ix: _Indices, params: Dict[str, Any]) -> FormExpr:
    p = params["p"]
    _require(1 <= p <= ix.N * ix.m, f"p={p} outside 1..{ix.N * ix.m}")
    at_branch, pointwise, inside = _spin_sums(ix, p)
    inv = Rational(1, ix.N)
    total = sum(((a - (inv - c)) ** 2 + (b - (c - inv)) ** 2
                 for a, b, c in zip(at_branch, pointwise, inside)), Rational(0))
    return FormExpr(ix.N, 0).add(_const(_q(total)), FunctionTerm(_one, 0, "exponents"))


def _kernel_at_branch(part: OrderedPartition, p: int) -> Tuple[Tuple[Rational, ...], Tuple[Rational, ...]]:
    """
    Exponents of (z - λ_i) and (λ_p - λ_j) in R(x, Q_p | e_Λ) (λ_p - z)

    R(x, y | e_Λ) = (1/N) Σ_l f_l(x, Λ) f_{-l}(y, Λ⁻) / (z(y) - z(x)); at y = Q_p only the
    label whose f_{-l}(y, Λ⁻) has order 0 in the local coordinate survives.
    """
    N = part.N
    minus = part.minus()
    order_zero = Rational(1 - N, 2 * N)
    labels = [l for l in spin_labels(N) if SpinF(-l, minus).exponents()[p - 1] == order_zero]
    _require(len(labels) == 1, f"{len(labels)} spin labels survive at Q_{p}")
    l = labels[0]
    return SpinF(l, part).exponents(), SpinF(-l, minus).exponents()


def _prop2_szego(ix: _Indices, params: Dict[str, Any]) -> FormExpr:
    """
    μ_p^Λ = N f'(λ_p)^{(N-1)/N} R(x,Q_p|e_Λ) R(x,Q_p|e_{Λ⁻}) dz/s, raised to the 2N-th power

    Both kernels come from the spin functions; the two √N of the local coordinate
    at Q_p cancel one 1/N, the leading N the other.
    """
    p = params["p"]
    _require(1 <= p <= ix.N * ix.m, f"p={p} outside 1..{ix.N * ix.m}")
    N = ix.N
    plus_x, plus_q = _kernel_at_branch(ix.part, p)
    minus_x, minus_q = _kernel_at_branch(ix.part.minus(), p)
    z_powers = [_integer(2 * N * (a + b)) for a, b in zip(plus_x, minus_x)]
    lam_powers = [_integer(2 * N * (a + b)) for a, b in zip(plus_q, minus_q)]

    def kernels(pt):
        lp = pt.lam(p)
        at_x = product((pt.z - l) ** e for l, e in zip(pt.lams, z_powers))
        at_q = product((lp - pt.lam(j)) ** lam_powers[j - 1] for j in range(1, N * ix.m + 1) if j != p)
        return (f_value(pt.lams, pt.z) ** 2 * fprime_at(pt.lams, p) ** (2 * (N - 1)) *
                at_x * at_q / (pt.z - lp) ** (4 * N))

    def mu_power(pt):
        return mu_coefficient(pt.lams, ix.part, p, pt.z) ** (2 * N)

    return (FormExpr(N, N * ix.m).add(_one, FunctionTerm(mu_power, 0, "mu"))
            .sub(_one, FunctionTerm(kernels, 0, "szego")))


# Residue-theorem identities

def _resth(ix: _Indices, params: Dict[str, Any]) -> FormExpr:
    r = params["r"]
    reading = params.get("reading", "residue")
    _require(1 <= r <= ix.N - 1, f"r={r} outside 1..{ix.N - 1}")
    _require(reading in ("literal", "residue"), f"unknown resth reading '{reading}'")
    N, m, n = ix.N, ix.m, ix.n
    top = [ix.i(N, s) for s in range(1, m)]
    block = [ix.i(r, s) for s in range(1, m + 1)]

    def defect(pt):
        total = 0
        for l in block:
            anchor = pt.lam(n) if reading == "literal" else pt.lam(l)
            num = product(anchor - pt.lam(s) for s in top)
            den = (pt.lam(n) - pt.lam(l)) * product(pt.lam(l) - pt.lam(s) for s in block if s != l)
            total += num / den
        return total - 1 / _A(ix, pt, r)

    return FormExpr(N, N * m).add(_one, FunctionTerm(defect, 0, "resth"))


def _resth1(ix: _Indices, params: Dict[str, Any]) -> FormExpr:
    N, m, n, im = ix.N, ix.m, ix.n, ix.im
    _require(m >= 3, "resth1 needs m >= 3")
    nodes = [ix.i(N - 1, s) for s in range(1, m)]

    def defect(pt):
        total = 0
        for l in nodes:
            den = (pt.lam(n) - pt.lam(l)) * product(pt.lam(l) - pt.lam(s) for s in nodes if s != l)
            total += (pt.lam(l) - pt.lam(im)) ** (m - 3) / den
        return total - (pt.lam(n) - pt.lam(im)) ** (m - 3) / product(pt.lam(n) - pt.lam(s) for s in nodes)

    return FormExpr(N, N * m).add(_one, FunctionTerm(defect, 0, "resth1"))


def _resth2a(ix: _Indices, params: Dict[str, Any]) -> FormExpr:
    r, subset, t = params["r"], tuple(params["I"]), params["t"]
    N, m, n, im = ix.N, ix.m, ix.n, ix.im
    _require(N >= 3 and 1 <= r <= N - 2, f"resth2a needs N >= 3 and r in 1..N-2, got r={r}")
    _require(subset and all(1 <= s <= m for s in subset), f"bad index set {subset}")
    _require(2 <= t <= len(subset) + 1, f"t={t} outside 2..{len(subset) + 1}")
    nodes = [ix.i(r, s) for s in subset]

    def defect(pt):
        a = pt.lam(im)
        total = 0
        for l in nodes:
            den = (pt.lam(l) - a) * product(pt.lam(l) - pt.lam(s) for s in nodes if s != l)
            total += (pt.lam(n) - pt.lam(l)) ** (t - 2) / den
        return total + (pt.lam(n) - a) ** (t - 2) / product(a - pt.lam(s) for s in nodes)

    return FormExpr(N, N * m).add(_one, FunctionTerm(defect, 0, "resth2a"))


def _resth2b(ix: _Indices, params: Dict[str, Any]) -> FormExpr:
    r, subset, l, J = params["r"], tuple(params["I"]), params["l"], tuple(params["J"])
    N, m, n = ix.N, ix.m, ix.n
    _require(N >= 3 and 1 <= r <= N - 2, f"resth2b needs N >= 3 and r in 1..N-2, got r={r}")
    _require(l in subset and all(1 <= s <= m for s in subset), f"bad index set {subset} / l={l}")
    _require(J and all(1 <= s <= m - 1 for s in J) and len(subset) <= len(J), f"bad index set J={J}")
    top = [ix.i(r, s) for s in subset if s != l]
    nodes = [ix.i(N - 1, s) for s in J]

    def defect(pt):
        total = 0
        for k in nodes:
            num = product(pt.lam(s) - pt.lam(k) for s in top)
            den = (pt.lam(n) - pt.lam(k)) * product(pt.lam(k) - pt.lam(s) for s in nodes if s != k)
            total += num / den
        rhs = product(pt.lam(s) - pt.lam(n) for s in top) / product(pt.lam(n) - pt.lam(s) for s in nodes)
        return total - rhs

    return FormExpr(N, N * m).add(_one, FunctionTerm(defect, 0, "resth2b"))


# Derivation chain steps

def _f21(ix: _Indices, params: Dict[str, Any]) -> FormExpr:
    r, l, l2 = params["r"], params["l"], params["l2"]
    _check_rl(ix, r, l, ix.N - 1)
    _check_rl(ix, r, l2, ix.N - 1)
    _require(l != l2, "needs l != l'")
    N, n = ix.N, ix.n
    a, b = ix.i(r, l), ix.i(r, l2)
    block = ix.part.block(r)

    def weight(pt):
        return ((pt.lam(n) - pt.lam(a)) / (pt.lam(n) - pt.lam(b)) /
                g_outside(pt.lams, block, pt.lam(a)))

    expr = FormExpr(N, N * ix.m).add(_one, FunctionTerm(lambda pt: g_inside(pt.lams, block, pt.z, skip=(a, b))))
    return expr.sub(weight, MuTerm(ix.part, a)).add(weight, MuTerm(ix.swap(b), a))


def _f22(ix: _Indices, params: Dict[str, Any]) -> FormExpr:
    _require(1 <= params["l"] <= ix.m - 1, f"l={params['l']} outside 1..{ix.m - 1}")
    return _f21(ix, {"r": ix.N - 1, "l": params["l"], "l2": ix.m})


def _f23(ix: _Indices, params: Dict[str, Any]) -> FormExpr:
    d = params["d"]
    N, m, im = ix.N, ix.m, ix.im
    _require(m >= 2 and 0 <= d <= m - 2, f"degree {d} outside 0..{m - 2}")
    nodes = [ix.i(N - 1, k) for k in range(1, m)]
    block = ix.part.block(N - 1)

    def defect(pt):
        total = pt.z ** d
        for k in nodes:
            den = product(pt.lam(k) - pt.lam(s) for s in nodes if s != k)
            total -= pt.lam(k) ** d / den * g_inside(pt.lams, block, pt.z, skip=(k, im))
        return total

    return FormExpr(N, N * m).add(_one, FunctionTerm(defect, 0, "interpolation"))


def _f30(ix: _Indices, params: Dict[str, Any]) -> FormExpr:
    expr = FormExpr(ix.N, ix.N * ix.m, modulo_exact=True).add(_one, MuTerm(ix.part, ix.n))
    return _interpolate_k(ix, expr, ix.n)


def _cofactor_weights(ix: _Indices, pt: Point) -> List[Any]:
    """(1/det A) Σ_k λ_n^{k-1} d_kj with A_kl = λ_{i_l}^{k-1}"""
    K = ix.K
    L = len(K)
    A = DomainMatrix.from_list([[pt.lam(K[l]) ** k for l in range(L)] for k in range(L)], QQ)
    det = A.det()
    adj = A.adjugate().to_list()
    x = pt.lam(ix.n)
    return [sum((x ** k * adj[j][k] for k in range(L)), QQ(0)) / det for j in range(L)]


def _f31(ix: _Indices, params: Dict[str, Any]) -> FormExpr:
    expr = FormExpr(ix.N, ix.N * ix.m, modulo_exact=True).add(_one, MuTerm(ix.part, ix.n))
    for j, k in enumerate(ix.K):
        expr.sub(lambda pt, j=j: _cofactor_weights(ix, pt)[j], MuTerm(ix.part, k))
    return expr


def _f32(ix: _Indices, params: Dict[str, Any]) -> FormExpr:
    j = params["j"]
    K = ix.K
    _require(1 <= j <= len(K), f"j={j} outside 1..{len(K)}")

    def defect(pt):
        return _cofactor_weights(ix, pt)[j - 1] - _lagrange(pt, ix.n, K[j - 1], K)

    return FormExpr(ix.N, ix.N * ix.m).add(_one, FunctionTerm(defect, 0, "cofactor"))


def _f41(ix: _Indices, params: Dict[str, Any]) -> FormExpr:
    r, l = params["r"], params["l"]
    _check_rl(ix, r, l, ix.N - 1)
    N, n = ix.N, ix.n
    p = ix.i(r, l)
    top = ix.part.block(N)
    block = ix.part.block(r)

    def difference(pt):
        x = pt.lam(n)
        ratio = g_inside(pt.lams, top, x, skip=(n,)) / g_inside(pt.lams, block, x, skip=(p,))
        bracket = (g_inside(pt.lams, top, pt.z, skip=(n,)) -
                   ratio * g_inside(pt.lams, block, pt.z, skip=(p,)))
        return g_outside(pt.lams, top, x) / (pt.z - x) * bracket

    expr = FormExpr(N, N * ix.m).add(_one, MuTerm(ix.part, n)).sub(_one, MuTerm(ix.swap(p), n))
    return expr.sub(_one, FunctionTerm(difference, 1, "f41"))


def _f42(ix: _Indices, params: Dict[str, Any]) -> FormExpr:
    r, l, k = params["r"], params["l"], params["k"]
    _check_rl(ix, r, l, ix.N - 1)
    _require(1 <= k <= ix.m - 1, f"k={k} outside 1..{ix.m - 1}")
    N, m, n = ix.N, ix.m, ix.n
    p = ix.i(r, l)
    ik = ix.i(N - 1, k)
    top = ix.part.block(N)
    block = ix.part.block(r)

    def defect(pt):
        x, y = pt.lam(n), pt.lam(ik)
        ratio = g_inside(pt.lams, top, x, skip=(n,)) / g_inside(pt.lams, block, x, skip=(p,))
        G = (g_inside(pt.lams, top, y, skip=(n,)) - ratio * g_inside(pt.lams, block, y, skip=(p,))) / (y - x)
        tops = [pt.lam(ix.i(N, s)) for s in range(1, m)]
        lead = product(y - t for t in tops) / (y - x)
        inner = (product((x - t) / (y - t) for t in tops) *
                 product((y - pt.lam(ix.i(r, s))) / (x - pt.lam(ix.i(r, s))) for s in range(1, m + 1) if s != l))
        return G - lead * (1 - inner)

    return FormExpr(N, N * m).add(_one, FunctionTerm(defect, 0, "f42"))


def _f43(ix: _Indices, params: Dict[str, Any]) -> FormExpr:
    r, l = params["r"], params["l"]
    _check_rl(ix, r, l, ix.N - 1)
    N, m, n, im = ix.N, ix.m, ix.n, ix.im
    p = ix.i(r, l)
    K = ix.K
    expr = FormExpr(N, N * m).add(_one, MuTerm(ix.part, n)).sub(_one, MuTerm(ix.swap(p), n))
    for k in range(1, m):
        ik = ix.i(N - 1, k)

        def weight(pt, k=k, ik=ik):
            return _lagrange(pt, n, ik, K) * _B(ix, pt, r, l, k)

        expr.sub(weight, MuTerm(ix.part, ik))
        expr.add(weight, MuTerm(ix.swap(im), ik))
    return expr


def _ds_rule(ix: _Indices, params: Dict[str, Any]) -> FormExpr:
    """∂(s^N)/∂λ_p through the s rule equals ∂f/∂λ_p"""
    p = params["p"]
    N = ix.N
    _require(1 <= p <= N * ix.m, f"p={p} outside 1..{N * ix.m}")

    def defect(pt):
        df = lambda_derivative(lambda lams, z: f_value(lams, z), pt, p)
        via_s = N * f_value(pt.lams, pt.z) * s_log_derivative(N, pt.z, pt.lam(p))
        return df - via_s

    return FormExpr(N, N * ix.m).add(_one, FunctionTerm(defect, 0, "ds"))


# Spin exponent sums

def _q_pair(N: int, i: int, j: int) -> Rational:
    return pair_exponent(i, j, N)


def _qsum_neg(ix: _Indices, params: Dict[str, Any]) -> FormExpr:
    N = ix.N
    total = sum((_q_pair(N, i, j) for i in range(N) for j in range(i + 1, N)), Rational(0))
    return FormExpr(N, 0).add(_const(_q(total + Rational(N * N - 1, 24))), FunctionTerm(_one, 0, "qsum"))


def _qsum_pos(ix: _Indices, params: Dict[str, Any]) -> FormExpr:
    N = ix.N
    gamma = Rational(N * N - 1, 12 * N)
    total = sum(((_q_pair(N, i, i) - gamma) ** 2 for i in range(N)), Rational(0))
    return FormExpr(N, 0).add(_const(_q(total)), FunctionTerm(_one, 0, "gamma"))


def _q_symmetry(ix: _Indices, params: Dict[str, Any]) -> FormExpr:
    N = ix.N
    total = Rational(0)
    for l in spin_labels(N):
        for i in range(N):
            total += (spin_exponent(l, i, N) + spin_exponent(-l, N - i, N)) ** 2
    for i in range(N):
        for j in range(N):
            q = _q_pair(N, i, j)
            total += (q - _q_pair(N, j, i)) ** 2 + (q - _q_pair(N, (i + 1) % N, (j + 1) % N)) ** 2
    return FormExpr(N, 0).add(_const(_q(total)), FunctionTerm(_one, 0, "symmetry"))


def _qsum_perm(ix: _Indices, params: Dict[str, Any]) -> FormExpr:
    N = ix.N
    pair_sum = sum((_q_pair(N, r, s) for r in range(N) for s in range(r + 1, N)), Rational(0))
    total = Rational(0)
    for i in range(N):
        for j in range(N):
            if i == j:
                continue
            orbit = sum((_q_pair(N, sigma[i], sigma[j]) for sigma in permutations(range(N))), Rational(0))
            total += (orbit - 2 * math.factorial(N - 2) * pair_sum) ** 2
    return FormExpr(N, 0).add(_const(_q(total)), FunctionTerm(_one, 0, "orbit"))


# Registry

@dataclass(frozen=True)
class IdentitySpec:
    id: str
    builder: Callable[[_Indices, Dict[str, Any]], FormExpr]
    cases: Callable[[int, int], List[Dict[str, Any]]]
    description: str
    informational: Tuple[Tuple[str, Any], ...] = ()


def _rl(N, m, top=None):
    top = N - 1 if top is None else top
    return [{"r": r, "l": l} for r in range(1, top + 1) for l in range(1, m + 1)]


def _rll(N, m):
    return [{"r": r, "l": l, "l2": l2} for r in range(1, N) for l in range(1, m + 1)
            for l2 in range(1, m + 1) if l != l2]


def _points(N, m):
    return [{"p": p} for p in range(1, N * m + 1)]


def _subsets(m):
    return [c for size in range(1, m + 1) for c in combinations(range(1, m + 1), size)]


def _resth2a_cases(N, m):
    if N < 3:
        return []
    return [{"r": r, "I": list(I), "t": t} for r in range(1, N - 1) for I in _subsets(m)
            for t in range(2, len(I) + 2)]


def _resth2b_cases(N, m):
    if N < 3 or m < 2:
        return []
    Js = [c for size in range(1, m) for c in combinations(range(1, m), size)]
    return [{"r": r, "I": list(I), "l": l, "J": list(J)} for r in range(1, N - 1) for I in _subsets(m)
            for l in I for J in Js if len(I) <= len(J)]


_NONE = lambda N, m: [{}]

REGISTRY: Dict[str, IdentitySpec] = {s.id: s for s in [
    IdentitySpec("rel1", _derivative_chain("f13"), _rl, "∂μ_p/∂λ_n in terms of μ_p and the swapped μ_n"),
    IdentitySpec("rel2", _rel2, _rll, "μ of Λ^(n i^r_l') at i^r_l, pointwise"),
    IdentitySpec("rel3", _rel3, lambda N, m: [{"l": l, "l2": l2} for l in range(1, m + 1)
                                             for l2 in range(1, m + 1) if l != l2],
                 "the r = N-1 case of rel2 in closed form"),
    IdentitySpec("rel4", _rel4, lambda N, m: [dict(c, reading=rd) for c in _rl(N, m)
                                             for rd in ("literal", "shifted")],
                 "μ of Λ^(n i^r_l) at n, modulo exact forms", (("reading", "shifted"),)),
    IdentitySpec("rel5", _rel5, lambda N, m: [c for c in _rl(N, m, N) if (c["r"], c["l"]) != (N, m)],
                 "μ of Λ^(n i^r_l) at i^r_l, modulo exact forms"),
    IdentitySpec("prop5", _prop5, lambda N, m: _points(N, m) if (N - 1) * m - 1 >= 0 else [],
                 "Σ ζ_j λ_p^{L-j} = μ_p + N d(s^{N-1}/(z - λ_p))"),
    IdentitySpec("lemma1_prod1", _lemma1_prod1, _points, "spin product at Q_p, 2N-th power"),
    IdentitySpec("lemma1_prod2", _lemma1_prod2, _points, "pointwise spin product, 2N-th power"),
    IdentitySpec("prod_exponents", _prod_exponents, _points, "exponent sums of the two spin products"),
    IdentitySpec("prop2_szego", _prop2_szego, _points, "μ_p as a product of two Szegő kernels"),
    IdentitySpec("resth", _resth, lambda N, m: [{"r": r, "reading": rd} for r in range(1, N)
                                               for rd in ("literal", "residue")],
                 "residue sum equal to A_r^{-1}"),
    IdentitySpec("resth1", _resth1, lambda N, m: [{}] if m >= 3 else [], "residue sum with (λ_l - λ_m)^{m-3}"),
    IdentitySpec("resth2a", _resth2a, _resth2a_cases, "residue sum over a subset of Λ_r"),
    IdentitySpec("resth2b", _resth2b, _resth2b_cases, "residue sum over a subset of Λ_{N-1}"),
    IdentitySpec("f11", _derivative_chain("f11"), _rl, "direct λ-derivative of μ_p"),
    IdentitySpec("f12", _derivative_chain("f12"), _rl, "after partial fractions"),
    IdentitySpec("f13", _derivative_chain("f13"), _rl, "after relabelling into Λ^(p n)"),
    IdentitySpec("f21", _f21, _rll, "g^{(ll')}_{Λ_r}(z) dz/s as a difference of μ"),
    IdentitySpec("f22", _f22, lambda N, m: [{"l": l} for l in range(1, m)], "the r = N-1, l' = m case"),
    IdentitySpec("f23", _f23, lambda N, m: [{"d": d} for d in range(0, m - 1)],
                 "interpolation of a polynomial of degree at most m-2"),
    IdentitySpec("f30", _f30, _NONE, "μ_n by interpolation over 𝒦, modulo exact forms"),
    IdentitySpec("f31", _f31, _NONE, "μ_n through Vandermonde cofactors, modulo exact forms"),
    IdentitySpec("f32", _f32, lambda N, m: [{"j": j} for j in range(1, (N - 1) * m)],
                 "Vandermonde cofactor expansion equals the Lagrange weight"),
    IdentitySpec("f41", _f41, _rl, "μ_n difference as a polynomial multiple"),
    IdentitySpec("f42", _f42, lambda N, m: [dict(c, k=k) for c in _rl(N, m) for k in range(1, m)],
                 "G^{rl} at i^{N-1}_k"),
    IdentitySpec("f43", _f43, _rl, "μ_n difference through B(r,l,k), pointwise"),
    IdentitySpec("ds_rule", _ds_rule, _points, "∂(s^N)/∂λ_p through the s rule"),
    IdentitySpec("qsum_neg", _qsum_neg, _NONE, "Σ_{i<j} q(i,j) = -(N²-1)/24"),
    IdentitySpec("qsum_pos", _qsum_pos, _NONE, "q(i,i) = (N²-1)/(12N)"),
    IdentitySpec("q_symmetry", _q_symmetry, _NONE, "-q_l(i) = q_{-l}(N-i) and q(i,j) = q(j,i) = q(i+1,j+1)"),
    IdentitySpec("qsum_perm", _qsum_perm, _NONE, "Σ_σ q(σi,σj) = 2(N-2)! Σ_{r<s} q(r,s)"),
]}

DERIVATION_IDS = ("f11", "f12", "f13", "f21", "f22", "f23", "f30", "f31", "f32", "f41", "f42", "f43")


@dataclass
class IdentityCase:
    id: str
    N: int
    m: int
    params: Dict[str, Any] = dataclass_field(default_factory=dict)
    partition: Optional[OrderedPartition] = None
    trials: int = config.IDENTITY_TRIALS
    seed: int = config.IDENTITY_SEED

    @property
    def informational(self) -> bool:
        spec = REGISTRY[self.id]
        return any(self.params.get(k) == v for k, v in spec.informational)

    def to_json(self) -> Dict[str, Any]:
        return {"id": self.id, "params": dict(self.params, N=self.N, m=self.m)}


def build_identity(case: IdentityCase) -> FormExpr:
    if case.id not in REGISTRY:
        raise BadIndices(f"unknown identity '{case.id}'")
    _require(case.N >= 2 and case.m >= 1, f"(N, m) = ({case.N}, {case.m}) needs N >= 2, m >= 1")
    part = case.partition or standard_partition(case.N, case.m)
    _require(part.N == case.N and part.m == case.m, "partition shape does not match (N, m)")
    return REGISTRY[case.id].builder(_Indices(case.N, case.m, part), case.params)


@dataclass
class Verdict:
    passed: bool
    trials: int
    witness: Optional[Point] = None
    value: Optional[Dict[int, Any]] = None

    def to_json(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"pass": self.passed, "trials": self.trials}
        if not self.passed:
            out["witness"] = self.witness.to_json() if self.witness else None
            out["value"] = {str(k): str(v) for k, v in (self.value or {}).items()}
        return out


def _rational(rng: np.random.Generator):
    num, den = rng.integers(1, config.SAMPLE_BOUND + 1, size=2)
    sign = 1 if rng.integers(0, 2) else -1
    return QQ(sign * int(num), int(den))


def test_identity(expr: FormExpr, trials: int = config.IDENTITY_TRIALS,
                  seed: int = config.IDENTITY_SEED) -> Verdict:
    """
    Exact evaluation at `trials` random rational points

    Points where a denominator vanishes are redrawn; more than 100 * trials
    redraws raise DegenerateSampling.
    """
    budget = 100 * max(trials, 1)
    attempts = 0
    for trial in range(trials):
        rng = np.random.default_rng([seed, trial])
        while True:
            attempts += 1
            if attempts > budget:
                raise DegenerateSampling(f"no denominator-safe point after {budget} draws")
            lams = tuple(_rational(rng) for _ in range(expr.degree))
            if len(set(lams)) != len(lams):
                continue
            pt = Point(lams, _rational(rng))
            try:
                ok, values = expr.is_zero_at(pt)
            except ZeroDivisionError:
                continue
            break
        if not ok:
            return Verdict(False, trial + 1, pt, values)
    return Verdict(True, trials)


# Keep pytest from collecting the public name above as a test
test_identity.__test__ = False


def registry_cases(N: int, m: int, ids: Optional[Iterable[str]] = None, trials: int = config.IDENTITY_TRIALS,
                   seed: int = config.IDENTITY_SEED) -> List[IdentityCase]:
    ids = list(ids) if ids else list(REGISTRY)
    for i in ids:
        if i not in REGISTRY:
            raise BadIndices(f"unknown identity '{i}'")
    return [IdentityCase(i, N, m, params, None, trials, seed) for i in ids for params in REGISTRY[i].cases(N, m)]


def run_cases(cases: Sequence[IdentityCase], workers: int = config.MAX_WORKERS) -> List[Dict[str, Any]]:
    """Results in case order; informational readings never count against the verdict"""
    results: List[Optional[Dict[str, Any]]] = [None] * len(cases)

    def run(case: IdentityCase) -> Dict[str, Any]:
        verdict = test_identity(build_identity(case), case.trials, case.seed)
        out = case.to_json()
        out.update(verdict.to_json())
        if case.informational:
            out["informational"] = True
        return out

    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        futures = {executor.submit(run, case): idx for idx, case in enumerate(cases)}
        for future in tqdm(as_completed(futures), total=len(futures), desc="Identities",
                           disable=not config.LOG_PROGRESS):
            results[futures[future]] = future.result()
    return results


def verify_appendix_suite(N: int, m: int, trials: int = config.IDENTITY_TRIALS, seed: int = config.IDENTITY_SEED,
                          ids: Optional[Iterable[str]] = None, workers: int = config.MAX_WORKERS) -> Dict[str, Any]:
    """Every admissible index choice of the selected identities (the derivation chain by default)"""
    if N not in (2, 3, 4) or m not in (1, 2, 3):
        raise BadIndices(f"(N, m) = ({N}, {m}) outside N in 2..4, m in 1..3")
    results = run_cases(registry_cases(N, m, ids or DERIVATION_IDS, trials, seed), workers)
    passed = all(r["pass"] for r in results if not r.get("informational"))
    return {"N": N, "m": m, "trials": trials, "seed": seed, "pass": passed, "results": results}
