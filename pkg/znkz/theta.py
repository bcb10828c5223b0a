"""
Riemann theta functions, the Abel map and the theta-function forms of the solutions

θ[δ,ε](z) = Σ_m exp(½(m+δ)τ(m+δ)ᵗ + (z + 2πiε)(m+δ)ᵗ) with Re τ negative
definite. Characteristics e_Λ are resolved by a finite search anchored on one
partition and then propagated by divisor arithmetic.
"""

import math
from dataclasses import dataclass
from itertools import product as cartesian
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from mpmath import mp
from sympy import Rational
from tqdm import tqdm

from . import config
from .algebra import (OrderedPartition, block_pair, block_permutations, block_self, discriminant,
                      pair_exponent, partition_denominator, thomae_mu)
from .curve import (BranchPoint, CurveSpec, LineSegment, SheetPoint, check_segments,
                    declared_path)
from .differentials import Mu, holomorphic_basis
from .errors import (Ambiguous, InvalidIndex, NoCandidate, NoConvergence, NotNegativeDefinite,
                     SingularCharacteristic, Underflow, WrongN)
from .kz import delta_exponent, enumerate_partitions, principal_power
from .periods import PeriodData, holomorphic_integrand
from .quadrature import EndpointLeg, integrate_path


def _mpf(r: Rational):
    return mp.mpf(r.p) / r.q


@dataclass(frozen=True)
class Characteristics:
    """e = 2πi ε + δ τ with δ, ε rational row vectors"""

    delta: Tuple[Rational, ...]
    epsilon: Tuple[Rational, ...]

    @classmethod
    def zero(cls, g: int) -> 'Characteristics':
        return cls(tuple(Rational(0) for _ in range(g)), tuple(Rational(0) for _ in range(g)))

    def point(self, tau) -> List[Any]:
        g = len(self.delta)
        return [2j * mp.pi * _mpf(self.epsilon[k]) +
                sum((_mpf(self.delta[i]) * tau[i, k] for i in range(g)), mp.mpc(0))
                for k in range(g)]

    def shifted(self, m: Sequence[int], n: Sequence[int]) -> 'Characteristics':
        return Characteristics(tuple(d + int(a) for d, a in zip(self.delta, m)),
                               tuple(e + int(b) for e, b in zip(self.epsilon, n)))

    def negated(self) -> 'Characteristics':
        return Characteristics(tuple(-d for d in self.delta), tuple(-e for e in self.epsilon)).reduced()

    def reduced(self) -> 'Characteristics':
        """Representative with entries in [0, 1)"""
        return Characteristics(tuple(d - math.floor(d) for d in self.delta),
                               tuple(e - math.floor(e) for e in self.epsilon))

    def to_json(self) -> Dict[str, List[str]]:
        return {"delta": [str(d) for d in self.delta], "epsilon": [str(e) for e in self.epsilon]}


@dataclass
class ThetaEval:
    """θ value with gradient and Hessian in z, the truncation radius and tail estimate"""

    value: Any
    gradient: List[Any]
    hessian: List[List[Any]]
    radius: float
    tail_bound: Any
    terms: int
    magnitude: Any = None
    precision_bits: int = 0

    @property
    def vanishes(self) -> bool:
        """|θ| is below half the working precision relative to Σ|terms|"""
        if self.magnitude is None:
            return self.value == 0
        return self.magnitude == 0 or abs(self.value) < self.magnitude * mp.mpf(2) ** (-(self.precision_bits // 2))

    def _nonzero(self) -> Any:
        if self.vanishes:
            raise Underflow("θ vanishes to working precision at the requested point")
        return self.value

    def derivative(self, alpha: Sequence[int]) -> Any:
        """∂^α θ for α a tuple of coordinate indices of length ≤ 2"""
        if len(alpha) == 0:
            return self.value
        if len(alpha) == 1:
            return self.gradient[alpha[0]]
        if len(alpha) == 2:
            return self.hessian[alpha[0]][alpha[1]]
        raise InvalidIndex(f"derivative order {len(alpha)} > 2")

    def log_gradient(self) -> List[Any]:
        v = self._nonzero()
        return [d / v for d in self.gradient]

    def log_hessian(self) -> List[List[Any]]:
        v = self._nonzero()
        g = len(self.gradient)
        return [[self.hessian[i][j] / v - self.gradient[i] * self.gradient[j] / v ** 2
                 for j in range(g)] for i in range(g)]

    @property
    def log_derivatives(self) -> Dict[Tuple[int, ...], Any]:
        out = {}
        grad = self.log_gradient()
        hess = self.log_hessian()
        for i in range(len(grad)):
            out[(i,)] = grad[i]
            for j in range(len(grad)):
                out[(i, j)] = hess[i][j]
        return out


def _completed_square(Q: np.ndarray) -> np.ndarray:
    """Q(y) = Σ_i q_ii (y_i + Σ_{j>i} q_ij y_j)² (Fincke-Pohst form)"""
    g = Q.shape[0]
    q = Q.astype(float).copy()
    for i in range(g):
        if q[i, i] <= 0:
            raise NotNegativeDefinite("-Re τ is not positive definite")
        for j in range(i + 1, g):
            q[j, i] = q[i, j]
            q[i, j] = q[i, j] / q[i, i]
        for k in range(i + 1, g):
            for l in range(k, g):
                q[k, l] -= q[k, i] * q[i, l]
    return q


def lattice_points(Q: np.ndarray, center: np.ndarray, shift: np.ndarray, radius2: float) -> List[Tuple[int, ...]]:
    """Integer n with ‖n + shift - center‖²_Q ≤ radius2"""
    g = Q.shape[0]
    q = _completed_square(Q)
    out = []
    y = [0.0] * g
    n = [0] * g

    def level(i, remaining):
        if i < 0:
            out.append(tuple(n))
            return
        c = -sum(q[i, j] * y[j] for j in range(i + 1, g))
        r = math.sqrt(max(remaining, 0.0) / q[i, i])
        offset = center[i] - shift[i]
        lo = math.ceil(c - r + offset - 1e-12)
        hi = math.floor(c + r + offset + 1e-12)
        for k in range(lo, hi + 1):
            y[i] = k + shift[i] - center[i]
            used = q[i, i] * (y[i] - c) ** 2
            if used <= remaining + 1e-12:
                n[i] = k
                level(i - 1, remaining - used)
        y[i] = 0.0

    level(g - 1, radius2)
    return out


def _derivative_order(deriv: Union[int, Sequence[int]]) -> int:
    """Order of a multi-index (tuple of coordinate indices), or an int order"""
    order = deriv if isinstance(deriv, int) else len(tuple(deriv))
    if not 0 <= order <= 2:
        raise InvalidIndex(f"derivative order {order} outside 0..2")
    return order


def _lattice_sum(points, tau, delta, ze, order: int):
    g = len(delta)
    value = mp.mpc(0)
    grad = [mp.mpc(0)] * g
    hess = [[mp.mpc(0)] * g for _ in range(g)]
    magnitude = mp.mpf(0)
    for n in points:
        x = [n[i] + delta[i] for i in range(g)]
        quad = sum((x[i] * tau[i, j] * x[j] for i in range(g) for j in range(g)), mp.mpc(0))
        term = mp.exp(quad / 2 + sum((ze[k] * x[k] for k in range(g)), mp.mpc(0)))
        value += term
        magnitude += abs(term)
        if order >= 1:
            for i in range(g):
                grad[i] += x[i] * term
                if order >= 2:
                    for j in range(g):
                        hess[i][j] += x[i] * x[j] * term
    return value, grad, hess, magnitude


def riemann_theta(z: Sequence[Any], tau, chars: Characteristics, deriv: Union[int, Sequence[int]] = 2,
                  precision_bits: Optional[int] = None) -> ThetaEval:
    """
    Lattice sum over the ellipsoid ‖m + δ - x*‖²_Q ≤ R², Q = -Re τ, x* = Q⁻¹ Re z

    R² starts at 2(bits + 24) ln 2 and grows until the omitted terms are below
    2^-(bits-8) of Σ|terms|. deriv is an order or a multi-index such as (i,) or
    (i, j); gradient and Hessian come from the same pass. A vanishing θ is
    returned as is; only its log-derivatives raise Underflow.
    """
    bits = precision_bits or mp.prec
    g = tau.rows
    order = _derivative_order(deriv)
    with mp.workprec(bits):
        z = [mp.mpc(v) for v in z]
        tau_np = np.array([[complex(tau[i, j]) for j in range(g)] for i in range(g)])
        if np.max(np.abs(tau_np - tau_np.T)) > 1e-8 * max(1.0, np.max(np.abs(tau_np))):
            raise NotNegativeDefinite("τ is not symmetric")
        Q = -tau_np.real
        Q = (Q + Q.T) / 2
        eigen = np.linalg.eigvalsh(Q)
        if eigen[0] <= 0:
            raise NotNegativeDefinite(f"Re τ has eigenvalue {-eigen[0]:.3e} >= 0")
        center = np.linalg.solve(Q, np.array([float(v.real) for v in z]))
        delta = [_mpf(d) for d in chars.delta]
        shift = np.array([float(d) for d in delta])
        ze = [z[k] + 2j * mp.pi * _mpf(chars.epsilon[k]) for k in range(g)]
        radius2 = 2.0 * (bits + 24) * math.log(2.0)
        target = mp.mpf(2) ** (-(bits - 8))
        for _ in range(max(config.THETA_RADIUS_STEPS, 1)):
            points = lattice_points(Q, center, shift, radius2)
            value, grad, hess, magnitude = _lattice_sum(points, tau, delta, ze, order)
            tail = mp.exp(-mp.mpf(radius2) / 2) * magnitude * (1 + mp.sqrt(radius2 / eigen[0])) ** g
            if tail < target * magnitude:
                return ThetaEval(value, grad, hess, math.sqrt(radius2), tail, len(points), magnitude, bits)
            radius2 *= 1.5
        raise NoConvergence(f"θ tail {mp.nstr(tail / magnitude, 5)} of Σ|terms| after "
                            f"{config.THETA_RADIUS_STEPS} radius steps")


def theta_at_zero(periods: PeriodData, chars: Characteristics) -> ThetaEval:
    return riemann_theta([mp.mpc(0)] * periods.genus, periods.tau, chars)


# Abel map

def _branch_leg(spec: CurveSpec, p: int):
    """Declared path from the base point to a point near λ_p, then straight into λ_p"""
    lp = spec.lam(p)
    z0 = spec.base_point
    w = lp + (z0 - lp) / abs(z0 - lp) * spec.min_distance / 3
    path = declared_path(spec, w)
    segments = [LineSegment(a, b) for a, b in zip(path[:-1], path[1:])]
    check_segments(spec, segments)
    return segments + [EndpointLeg(w, lp, p, spec.N)]


def holomorphic_path_integrals(spec: CurveSpec, target) -> List[Any]:
    """∫ of the holomorphic basis from the base point (sheet 0) to z, or to Q_p"""
    with mp.workprec(spec.precision_bits):
        if isinstance(target, BranchPoint):
            segments = _branch_leg(spec, target.p)
        else:
            path = declared_path(spec, target)
            segments = [LineSegment(a, b) for a, b in zip(path[:-1], path[1:])]
            check_segments(spec, segments)
        if not segments or all(seg.length == 0 for seg in segments):
            return [mp.mpc(0)] * spec.genus
        values, _, _ = integrate_path(spec, segments, spec.base_logs, holomorphic_integrand(spec))
        return values


def abel_map(spec: CurveSpec, periods: PeriodData, target) -> List[Any]:
    """
    ∫ of v = (v_1..v_g) from the base point on sheet 0 to a SheetPoint or BranchPoint

    A point on sheet k is reached through Q_1, which lies on every sheet.
    """
    with mp.workprec(spec.precision_bits):
        sigma = periods.sigma
        g = spec.genus
        if isinstance(target, BranchPoint):
            if not 1 <= target.p <= spec.degree:
                raise InvalidIndex(f"branch index {target.p} outside 1..{spec.degree}")
            h = holomorphic_path_integrals(spec, target)
        else:
            if abs(target.z - spec.base_point) == 0 and target.sheet % spec.N == 0:
                return [mp.mpc(0)] * g
            h0 = holomorphic_path_integrals(spec, target.z)
            k = target.sheet % spec.N
            if k == 0:
                h = h0
            else:
                hq = holomorphic_path_integrals(spec, BranchPoint(1))
                basis = holomorphic_basis(spec)
                h = [spec.omega ** (-w.alpha * k) * (a - b) + b for w, a, b in zip(basis, h0, hq)]
        return [sum((sigma[j, c] * h[c] for c in range(g)), mp.mpc(0)) for j in range(g)]


def lattice_coordinates(periods: PeriodData, e: Sequence[Any]) -> Tuple[List[Any], List[Any]]:
    """Real (δ, ε) with e = 2πi ε + δ τ"""
    g = periods.genus
    tau = periods.tau
    re_tau = mp.matrix([[tau[i, j].real for j in range(g)] for i in range(g)])
    re_e = mp.matrix([[v.real for v in e]])
    delta = re_e * mp.inverse(re_tau)
    delta = [delta[0, k] for k in range(g)]
    eps = [(e[k].imag - sum((delta[i] * tau[i, k].imag for i in range(g)), mp.mpf(0))) / (2 * mp.pi)
           for k in range(g)]
    return delta, eps


def _snap(values: Sequence[Any], denominator: int, what: str) -> Tuple[Rational, ...]:
    out = []
    for v in values:
        k = int(mp.nint(v * denominator))
        if abs(v * denominator - k) > 1e-6:
            raise NoCandidate(f"{what} coordinate {mp.nstr(v, 10)} is not on the 1/{denominator} grid")
        out.append(Rational(k % denominator, denominator))
    return tuple(out)


# Characteristic resolution

def hessian_log_theta(periods: PeriodData, chars: Characteristics) -> List[List[Any]]:
    try:
        return theta_at_zero(periods, chars).log_hessian()
    except Underflow as e:
        raise SingularCharacteristic(f"θ[{chars.to_json()}](0) = 0: {e}")


def a_period_prediction(periods: PeriodData, hessian: Sequence[Sequence[Any]], p: int, i: int):
    """N² Σ_β λ_p^{β-1} D_β ∂_i log θ(0), without the normalization constant κ"""
    spec = periods.spec
    lp = spec.lam(p)
    g = spec.genus
    total = mp.mpc(0)
    for b in range(1, spec.L + 1):
        directional = sum((periods.D[b - 1, j] * hessian[j][i] for j in range(g)), mp.mpc(0))
        total += lp ** (b - 1) * directional
    return spec.N ** 2 * total


def _a_period_defect(periods: PeriodData, part: OrderedPartition, hessian, kappa) -> Any:
    spec = periods.spec
    worst = mp.mpf(0)
    scale = mp.mpf(0)
    for i in range(1, spec.genus + 1):
        for p in range(1, spec.degree + 1):
            actual = periods.period(Mu(part, p), 'A', i)
            predicted = kappa * a_period_prediction(periods, hessian, p, i - 1)
            worst = max(worst, abs(actual - predicted))
            scale = max(scale, abs(actual))
    return worst / scale if scale else worst


class CharacteristicSolver:
    """
    Resolves e_Λ for every partition of one curve and basis

    e_Λ = s·Σ_r r Σ_{p∈Λ_r} (A(Q_p) - A(Q_1)) + c; the sign s, the constant c
    and the normalization κ ∈ {2πi, -2πi} are fixed by a search on the anchor
    partition and confirmed on the others.
    """

    def __init__(self, spec: CurveSpec, periods: PeriodData):
        self.spec = spec
        self.periods = periods
        self.sign = None
        self.shift = None
        self.kappa = None
        self.anchor = None
        self._images = None
        self._resolved = {}

    def tolerance(self):
        return max(mp.mpf(2) ** (-(self.spec.precision_bits // 3)), mp.mpf(10) ** -12)

    def branch_images(self) -> List[List[Any]]:
        if self._images is None:
            spec = self.spec
            images = []
            for p in tqdm(range(1, spec.degree + 1), desc="Abel images", disable=not config.LOG_PROGRESS):
                images.append(abel_map(spec, self.periods, BranchPoint(p)))
            self._images = images
        return self._images

    def divisor_image(self, part: OrderedPartition) -> List[Any]:
        """Σ_{r=1}^{N-1} r Σ_{p∈Λ_r} (A(Q_p) - A(Q_1))"""
        images = self.branch_images()
        g = self.spec.genus
        out = [mp.mpc(0)] * g
        for r in range(1, self.spec.N):
            for p in part.block(r):
                out = [o + r * (images[p - 1][k] - images[0][k]) for k, o in enumerate(out)]
        return out

    def _propagate(self, part: OrderedPartition, sign: int, shift: Sequence[Any]) -> Characteristics:
        u = self.divisor_image(part)
        e = [sign * a + b for a, b in zip(u, shift)]
        delta, eps = lattice_coordinates(self.periods, e)
        denominator = 2 * self.spec.N
        return Characteristics(_snap(delta, denominator, "δ"), _snap(eps, denominator, "ε"))

    def _passes(self, part: OrderedPartition, chars: Characteristics) -> Optional[Any]:
        try:
            hessian = hessian_log_theta(self.periods, chars)
        except SingularCharacteristic:
            return None
        for kappa in (2j * mp.pi, -2j * mp.pi):
            if _a_period_defect(self.periods, part, hessian, kappa) < self.tolerance():
                return kappa
        return None

    def resolve(self, anchor: Optional[OrderedPartition] = None) -> None:
        spec = self.spec
        g = spec.genus
        denominator = 2 * spec.N
        count = denominator ** (2 * g)
        if count > config.MAX_CHARACTERISTIC_CANDIDATES:
            raise NoCandidate(f"{count} candidate characteristics exceed the search cap "
                              f"{config.MAX_CHARACTERISTIC_CANDIDATES}")
        parts = enumerate_partitions(spec.N, spec.m)
        anchor = (anchor or parts[0]).canonical()
        grid = [Rational(k, denominator) for k in range(denominator)]
        passing = []
        for values in tqdm(cartesian(grid, repeat=2 * g), total=count, desc="Characteristics",
                           disable=not config.LOG_PROGRESS):
            chars = Characteristics(tuple(values[:g]), tuple(values[g:]))
            kappa = self._passes(anchor, chars)
            if kappa is not None:
                passing.append((chars, kappa))
        if not passing:
            raise NoCandidate(f"no characteristic satisfies the A-period identity for {anchor.to_json()}")
        others = [p for p in parts if p.canonical() != anchor][:23]
        families = {}
        u_anchor = self.divisor_image(anchor)
        for chars, kappa in passing:
            point = chars.point(self.periods.tau)
            for sign in (1, -1):
                shift = [a - sign * b for a, b in zip(point, u_anchor)]
                try:
                    family = [self._propagate(p, sign, shift) for p in others]
                except NoCandidate:
                    continue
                if all(self._passes(p, c) == kappa for p, c in zip(others, family)):
                    key = tuple(c.reduced() for c in [chars] + family)
                    mirror = tuple(c.negated() for c in key)
                    canon = min(key, mirror, key=lambda t: [c.to_json() for c in t].__repr__())
                    families.setdefault(canon, (sign, shift, kappa, chars))
        if not families:
            raise NoCandidate("no anchor characteristic propagates consistently to the other partitions")
        if len(families) > 1:
            raise Ambiguous(f"{len(families)} inequivalent characteristic families pass")
        self.sign, self.shift, self.kappa, chosen = next(iter(families.values()))
        self.anchor = anchor
        self._resolved[anchor] = chosen.reduced()
        if config.LOG_CHARACTERISTICS:
            print(f"  characteristics: {len(passing)} anchor candidates, sign {self.sign}, "
                  f"κ = {'+' if self.kappa.imag > 0 else '-'}2πi")

    def characteristics(self, part: OrderedPartition) -> Characteristics:
        key = part.canonical()
        if self.shift is None:
            self.resolve()
        if key not in self._resolved:
            self._resolved[key] = self._propagate(key, self.sign, self.shift)
        return self._resolved[key]


def find_characteristics(spec: CurveSpec, periods: PeriodData, part: OrderedPartition,
                         solver: Optional[CharacteristicSolver] = None) -> Characteristics:
    solver = solver or CharacteristicSolver(spec, periods)
    with mp.workprec(spec.precision_bits):
        return solver.characteristics(part)


def a_period_identity_defect(spec: CurveSpec, periods: PeriodData, part: OrderedPartition,
                             solver: CharacteristicSolver) -> Dict[str, Any]:
    """max_{p,i} relative |∫_{A_i} μ_p - κ N² Σ_β λ_p^{β-1} D_β ∂_i log θ[e_Λ](0)|"""
    with mp.workprec(spec.precision_bits):
        chars = solver.characteristics(part)
        hessian = hessian_log_theta(periods, chars)
        defect = _a_period_defect(periods, part.canonical(), hessian, solver.kappa)
        return {"defect": defect, "kappa": "+2πi" if solver.kappa.imag > 0 else "-2πi",
                "characteristics": chars}


# Theta-function forms of the solutions

def directional_determinant(periods: PeriodData, hessian, index_set: Sequence[int]):
    """det(∂_{i_j} D_k log θ(0))_{j,k}"""
    L = periods.spec.L
    g = periods.genus
    if len(index_set) != L or len(set(index_set)) != L or any(not 1 <= i <= g for i in index_set):
        raise InvalidIndex(f"index set {list(index_set)} must be {L} distinct values in 1..{g}")
    M = mp.matrix(L, L)
    for j, i in enumerate(index_set):
        for k in range(L):
            M[j, k] = sum((periods.D[k, l] * hessian[l][i - 1] for l in range(g)), mp.mpc(0))
    return mp.det(M)


def theta_solution(spec: CurveSpec, periods: PeriodData, part: OrderedPartition,
                   index_set: Optional[Sequence[int]] = None,
                   solver: Optional[CharacteristicSolver] = None):
    """Δ^{(N-1)/N²} / Π(Λ_iΛ_j) · det(∂_{i_j} D_k log θ[e_Λ](0)), without the constant c"""
    solver = solver or CharacteristicSolver(spec, periods)
    index_set = list(index_set) if index_set is not None else list(range(1, spec.L + 1))
    with mp.workprec(spec.precision_bits):
        hessian = hessian_log_theta(periods, solver.characteristics(part))
        det = directional_determinant(periods, hessian, index_set)
        prefactor = principal_power(discriminant(spec.lambdas), delta_exponent(spec.N))
        return prefactor / partition_denominator(spec.lambdas, part) * det


def _abs_power(x, exponent: Rational):
    return mp.exp(_mpf(exponent) * mp.log(abs(x)))


def product_theta_solution(spec: CurveSpec, periods: PeriodData, part: OrderedPartition,
                      index_set: Optional[Sequence[int]] = None,
                      solver: Optional[CharacteristicSolver] = None):
    """
    C(λ) Π_σ θ[e_{Λ^σ}](0)^{12N/(N+1)!} det(∂_{i_j} D_k log θ[e_Λ](0)) with
    C(λ) = (det A)^{-6/(N+1)} Δ^{-3(N-1)/(N+1)+(N-1)/N²}; principal branches,
    so only the modulus is meaningful
    """
    solver = solver or CharacteristicSolver(spec, periods)
    index_set = list(index_set) if index_set is not None else list(range(1, spec.L + 1))
    N = spec.N
    with mp.workprec(spec.precision_bits):
        hessian = hessian_log_theta(periods, solver.characteristics(part))
        det = directional_determinant(periods, hessian, index_set)
        power = Rational(12 * N, math.factorial(N + 1))
        product = mp.mpc(1)
        for sigma in block_permutations(N):
            theta = theta_at_zero(periods, solver.characteristics(part.permute(sigma))).value
            product *= principal_power(theta, power)
        c_lambda = (principal_power(mp.det(periods.A_matrix), Rational(-6, N + 1)) *
                    principal_power(discriminant(spec.lambdas),
                                    Rational(-3 * (N - 1), N + 1) + delta_exponent(N)))
        return c_lambda * product * det


def thomae_quantity(spec: CurveSpec, periods: PeriodData, part: OrderedPartition, chars: Characteristics):
    """|θ[e_Λ](0)|^{2N} / (|det A|^N Π_{i≤j} |(Λ_iΛ_j)|^{2Nq(i,j)+Nμ})"""
    N = spec.N
    theta = theta_at_zero(periods, chars).value
    mu = thomae_mu(N)
    denom = _abs_power(mp.det(periods.A_matrix), Rational(N))
    for i in range(1, N + 1):
        for j in range(i, N + 1):
            if i == j:
                pair = block_self(spec.lambdas, part.block(i))
                if part.m < 2:
                    continue
            else:
                pair = block_pair(spec.lambdas, part.block(i), part.block(j))
            denom *= _abs_power(pair, 2 * N * pair_exponent(i % N, j % N, N) + N * mu)
    return _abs_power(theta, Rational(2 * N)) / denom


def _spread(values: Sequence[Any]):
    mean = sum(values, mp.mpf(0)) / len(values)
    return max(abs(v - mean) for v in values) / abs(mean)


def thomae_check(spec: CurveSpec, context, part: OrderedPartition, samples: Sequence[Sequence[Any]],
                 solver: Optional[CharacteristicSolver] = None):
    """
    Max relative spread of the Thomae quotient across λ samples

    Samples are nearby λ configurations reached with the same cycle codes, so the
    characteristics found at the reference curve stay valid.
    """
    solver = solver or CharacteristicSolver(spec, context.periods)
    with mp.workprec(spec.precision_bits):
        chars = solver.characteristics(part)
        values = [thomae_quantity(spec, context.periods, part, chars)]
        for lams in samples:
            moved = context.at(lams)
            values.append(thomae_quantity(moved.spec, moved.periods, part, chars))
        return _spread(values)


def theta_product_quantity(spec: CurveSpec, periods: PeriodData, part: OrderedPartition, solver_chars):
    """|Π_{i<j}(Λ_iΛ_j)| / (|det A|^{6/(N+1)} |Δ|^{3(N-1)/(N+1)} Π_σ |θ[e_{Λ^σ}](0)|^{-12N/(N+1)!})"""
    N = spec.N
    power = Rational(12 * N, math.factorial(N + 1))
    thetas = mp.mpf(1)
    for sigma in block_permutations(N):
        thetas *= _abs_power(theta_at_zero(periods, solver_chars(part.permute(sigma))).value, -power)
    denom = (_abs_power(mp.det(periods.A_matrix), Rational(6, N + 1)) *
             _abs_power(discriminant(spec.lambdas), Rational(3 * (N - 1), N + 1)) * thetas)
    return abs(partition_denominator(spec.lambdas, part)) / denom


def theta_product_check(spec: CurveSpec, context, parts: Sequence[OrderedPartition],
                samples: Sequence[Sequence[Any]], solver: Optional[CharacteristicSolver] = None):
    """Spread of the theta-product composite across λ samples and partitions"""
    solver = solver or CharacteristicSolver(spec, context.periods)
    with mp.workprec(spec.precision_bits):
        values = [theta_product_quantity(spec, context.periods, p, solver.characteristics) for p in parts]
        for lams in samples:
            moved = context.at(lams)
            values.extend(theta_product_quantity(moved.spec, moved.periods, p, solver.characteristics) for p in parts)
        return _spread(values)


def smirnov_sl2(spec: CurveSpec, periods: PeriodData,
                solver: Optional[CharacteristicSolver] = None) -> Dict[OrderedPartition, Any]:
    """(det A)^{-3} Δ^{-3/4} θ[e_Λ](0)⁴ det(∂_i∂_j log θ[e_Λ](0)) for every Λ (N = 2)"""
    if spec.N != 2:
        raise WrongN(f"the hyperelliptic formula needs N = 2, got N = {spec.N}")
    solver = solver or CharacteristicSolver(spec, periods)
    with mp.workprec(spec.precision_bits):
        lead = (principal_power(mp.det(periods.A_matrix), Rational(-3)) *
                principal_power(discriminant(spec.lambdas), Rational(-3, 4)))
        out = {}
        for part in enumerate_partitions(spec.N, spec.m):
            ev = theta_at_zero(periods, solver.characteristics(part))
            hess = mp.matrix(ev.log_hessian())
            out[part.canonical()] = lead * ev.value ** 4 * mp.det(hess)
        return out


def modulus_ratio_spread(numerators: Dict[OrderedPartition, Any], denominators: Dict[OrderedPartition, Any]):
    """Relative spread of |a_Λ / b_Λ| across the shared keys"""
    ratios = [abs(numerators[k] / denominators[k]) for k in numerators if k in denominators]
    return _spread(ratios)


def ratio_spread(numerators: Dict[OrderedPartition, Any], denominators: Dict[OrderedPartition, Any]):
    """Relative spread of the complex ratio a_Λ / b_Λ across the shared keys"""
    ratios = [numerators[k] / denominators[k] for k in numerators if k in denominators]
    mean = sum(ratios, mp.mpc(0)) / len(ratios)
    return max(abs(r - mean) for r in ratios) / abs(mean)
