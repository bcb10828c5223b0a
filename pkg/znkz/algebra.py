"""
Scalar-generic polynomial and block-product helpers

Everything here works on any field-like scalar type: mpmath mpc for the
numerical paths, sympy QQ elements and fraction-field elements for the exact
ones. Branch indices are 1-based throughout, lambdas are 0-based sequences.
"""

from dataclasses import dataclass
from itertools import permutations
from typing import Any, Iterable, List, Sequence, Tuple

import sympy
from sympy import Rational

from .errors import BadIndices, InvalidIndex


def product(values: Iterable[Any], start: Any = 1) -> Any:
    result = start
    for v in values:
        result = result * v
    return result


# Polynomials are coefficient lists, lowest degree first

def poly_from_roots(roots: Sequence[Any]) -> List[Any]:
    coeffs: List[Any] = [1]
    for r in roots:
        shifted = [0] + coeffs
        for i, c in enumerate(coeffs):
            shifted[i] = shifted[i] - r * c
        coeffs = shifted
    return coeffs


def poly_eval(coeffs: Sequence[Any], x: Any) -> Any:
    acc: Any = 0
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def poly_derivative(coeffs: Sequence[Any]) -> List[Any]:
    return [i * c for i, c in enumerate(coeffs)][1:]


def poly_part(coeffs: Sequence[Any], shift: int) -> List[Any]:
    """Polynomial part [p(z) / z^shift]_0"""
    return list(coeffs[shift:])


def poly_add(a: Sequence[Any], b: Sequence[Any]) -> List[Any]:
    n = max(len(a), len(b))
    return [(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)]


def poly_scale(a: Sequence[Any], c: Any) -> List[Any]:
    return [c * x for x in a]


def poly_mul(a: Sequence[Any], b: Sequence[Any]) -> List[Any]:
    if not a or not b:
        return []
    out: List[Any] = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] = out[i + j] + x * y
    return out


@dataclass(frozen=True)
class OrderedPartition:
    """
    Ordered partition (Λ_1, ..., Λ_N) of {1..Nm} into blocks of size m

    Positions inside a block are kept: element i^r_l is blocks[r-1][l-1].
    Block indices are taken modulo N with Λ_0 = Λ_N.
    """

    blocks: Tuple[Tuple[int, ...], ...]

    @classmethod
    def from_blocks(cls, blocks: Sequence[Sequence[int]]) -> 'OrderedPartition':
        blocks = tuple(tuple(int(i) for i in b) for b in blocks)
        if len(blocks) < 2:
            raise InvalidIndex(f"need at least 2 blocks, got {len(blocks)}")
        m = len(blocks[0])
        if m < 1 or any(len(b) != m for b in blocks):
            raise InvalidIndex(f"blocks must all have the same positive size: {blocks}")
        flat = sorted(i for b in blocks for i in b)
        if flat != list(range(1, len(blocks) * m + 1)):
            raise InvalidIndex(f"blocks do not partition 1..{len(blocks) * m}: {blocks}")
        return cls(blocks)

    @property
    def N(self) -> int:
        return len(self.blocks)

    @property
    def m(self) -> int:
        return len(self.blocks[0])

    def block(self, r: int) -> Tuple[int, ...]:
        r = r % self.N
        return self.blocks[(r if r else self.N) - 1]

    def block_of(self, i: int) -> int:
        for r, b in enumerate(self.blocks, start=1):
            if i in b:
                return r
        raise InvalidIndex(f"index {i} not in partition")

    def k(self) -> Tuple[int, ...]:
        """k_i for i = 1..Nm"""
        out = [0] * (self.N * self.m)
        for r, b in enumerate(self.blocks, start=1):
            for i in b:
                out[i - 1] = r
        return tuple(out)

    def element(self, r: int, l: int) -> int:
        """i^r_l"""
        return self.block(r)[l - 1]

    def minus(self) -> 'OrderedPartition':
        """Λ⁻ with Λ⁻_j = Λ_{N-j}"""
        return OrderedPartition(tuple(self.block(self.N - j) for j in range(1, self.N + 1)))

    def swap(self, p: int, q: int) -> 'OrderedPartition':
        """Λ^(pq): p and q exchange places"""
        def sub(i):
            return q if i == p else p if i == q else i
        return OrderedPartition(tuple(tuple(sub(i) for i in b) for b in self.blocks))

    def cyclic_shift(self) -> 'OrderedPartition':
        """(Λ_N, Λ_1, ..., Λ_{N-1})"""
        return OrderedPartition((self.blocks[-1],) + self.blocks[:-1])

    def permute(self, sigma: Sequence[int]) -> 'OrderedPartition':
        """Λ^σ for σ a permutation of 1..N-1 given as its image tuple; Λ_N stays put"""
        if sorted(sigma) != list(range(1, self.N)):
            raise InvalidIndex(f"not a permutation of 1..{self.N - 1}: {sigma}")
        return OrderedPartition(tuple(self.block(s) for s in sigma) + (self.blocks[-1],))

    def canonical(self) -> 'OrderedPartition':
        return OrderedPartition(tuple(tuple(sorted(b)) for b in self.blocks))

    def to_json(self) -> List[List[int]]:
        return [list(b) for b in self.blocks]


def block_permutations(N: int) -> List[Tuple[int, ...]]:
    """S_{N-1} acting on block labels 1..N-1"""
    return list(permutations(range(1, N)))


# Block products of the curve data

def lam(lams: Sequence[Any], i: int) -> Any:
    return lams[i - 1]


def f_value(lams: Sequence[Any], z: Any) -> Any:
    return product(z - l for l in lams)


def f_derivative(lams: Sequence[Any], z: Any) -> Any:
    total: Any = 0
    for i in range(len(lams)):
        total = total + product(z - l for j, l in enumerate(lams) if j != i)
    return total


def fprime_at(lams: Sequence[Any], p: int) -> Any:
    lp = lam(lams, p)
    return product(lp - l for j, l in enumerate(lams, start=1) if j != p)


def g_outside(lams: Sequence[Any], block: Sequence[int], x: Any) -> Any:
    """g^{(Λ_r)}(x)"""
    inside = set(block)
    return product(x - l for j, l in enumerate(lams, start=1) if j not in inside)


def g_inside(lams: Sequence[Any], block: Sequence[int], x: Any, skip: Iterable[int] = ()) -> Any:
    """g_{Λ_r}(x), or g^{(p)}_{Λ_r}(x) with skip=(p,)"""
    skip = set(skip)
    return product(x - lam(lams, j) for j in block if j not in skip)


def block_pair(lams: Sequence[Any], a: Sequence[int], b: Sequence[int]) -> Any:
    """(Λ_i Λ_j)"""
    return product(lam(lams, r) - lam(lams, s) for r in a for s in b)


def block_self(lams: Sequence[Any], a: Sequence[int]) -> Any:
    """(Λ_i Λ_i) over r < s"""
    a = sorted(a)
    return product(lam(lams, a[x]) - lam(lams, a[y])
                   for x in range(len(a)) for y in range(x + 1, len(a)))


def partition_denominator(lams: Sequence[Any], part: OrderedPartition) -> Any:
    """Π_{i<j} (Λ_i Λ_j)"""
    return product(block_pair(lams, part.blocks[i], part.blocks[j])
                   for i in range(part.N) for j in range(i + 1, part.N))


def discriminant(lams: Sequence[Any]) -> Any:
    """Δ = Π_{i<j} (λ_i - λ_j)"""
    n = len(lams)
    return product(lams[i] - lams[j] for i in range(n) for j in range(i + 1, n))


def vandermonde(lams: Sequence[Any], ps: Sequence[int]) -> Any:
    """Δ(p_1..p_L) = det(λ_{p_j}^{L-i})"""
    if len(set(ps)) != len(ps):
        raise BadIndices(f"repeated index in {list(ps)}")
    return product(lam(lams, ps[a]) - lam(lams, ps[b])
                   for a in range(len(ps)) for b in range(a + 1, len(ps)))


def lagrange_weight(x: Any, k: int, nodes: Sequence[Any]) -> Any:
    """Π_{j != k} (x - nodes[j])/(nodes[k] - nodes[j])"""
    num: Any = 1
    den: Any = 1
    for j, y in enumerate(nodes):
        if j == k:
            continue
        num = num * (x - y)
        den = den * (nodes[k] - y)
    if den == 0:
        raise BadIndices("coincident interpolation nodes")
    return num / den


# Differential-form coefficients relative to dz/s

def mu_coefficient(lams: Sequence[Any], part: OrderedPartition, p: int, z: Any) -> Any:
    """g^{(Λ_r)}(λ_p) g^{(p)}_{Λ_r}(z) / (z - λ_p)"""
    block = part.block(part.block_of(p))
    lp = lam(lams, p)
    return g_outside(lams, block, lp) * g_inside(lams, block, z, skip=(p,)) / (z - lp)


def zeta_polynomial(lams: Sequence[Any], part: OrderedPartition, j: int) -> List[Any]:
    """Σ_k g_{Λ_k}(z) d/dz [g^{(Λ_k)}(z) / z^{L-j+1}]_0 as a coefficient list"""
    L = (part.N - 1) * part.m - 1
    if not 1 <= j <= L:
        raise InvalidIndex(f"zeta index j={j} outside 1..{L}")
    total: List[Any] = []
    for block in part.blocks:
        outside = [l for i, l in enumerate(lams, start=1) if i not in block]
        inside = [lam(lams, i) for i in block]
        part_poly = poly_derivative(poly_part(poly_from_roots(outside), L - j + 1))
        total = poly_add(total, poly_mul(poly_from_roots(inside), part_poly))
    return total


def mu_representative(lams: Sequence[Any], part: OrderedPartition, p: int) -> List[Any]:
    """Σ_j ζ_j λ_p^{L-j}: the polynomial representative of μ_p modulo exact forms"""
    L = (part.N - 1) * part.m - 1
    lp = lam(lams, p)
    total: List[Any] = []
    for j in range(1, L + 1):
        total = poly_add(total, poly_scale(zeta_polynomial(lams, part, j), lp ** (L - j)))
    return total


def exact_part_coefficient(lams: Sequence[Any], N: int, p: int, z: Any) -> Any:
    """N d(s^{N-1}/(z - λ_p)) divided by dz/s"""
    lp = lam(lams, p)
    return ((N - 1) * f_derivative(lams, z) * (z - lp) - N * f_value(lams, z)) / (z - lp) ** 2


# Spin exponents

def frac(x: Rational) -> Rational:
    return x - sympy.floor(x)


def spin_labels(N: int) -> List[Rational]:
    """ℒ = {-(N-1)/2, ..., (N-1)/2}"""
    return [Rational(-(N - 1), 2) + j for j in range(N)]


def spin_exponent(l: Any, i: int, N: int) -> Rational:
    """q_l(i) = (1-N)/(2N) + {(l + i + (N-1)/2)/N}"""
    l = Rational(l)
    return Rational(1 - N, 2 * N) + frac((l + i + Rational(N - 1, 2)) / N)


def pair_exponent(i: int, j: int, N: int) -> Rational:
    """q(i,j) = Σ_l q_l(i) q_l(j)"""
    return sum((spin_exponent(l, i, N) * spin_exponent(l, j, N) for l in spin_labels(N)), Rational(0))


def thomae_mu(N: int) -> Rational:
    return Rational((N - 1) * (2 * N - 1), 6 * N)


def thomae_gamma(N: int) -> Rational:
    return Rational(N * N - 1, 12 * N)
