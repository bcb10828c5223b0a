"""
The Z_N curve s^N = f(z) = Π (z - λ_j)

Sheets are labelled by continuing the factor logarithms log(z - λ_j) from a
base point above every branch point; s = exp(Σ log(z - λ_j) / N). Branch
tracking never takes an N-th root of a sample value.
"""

from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Any, List, Optional, Sequence, Tuple, Union

from mpmath import mp

from . import config
from .algebra import fprime_at
from .errors import (BadCount, DuplicateBranchPoint, InvalidIndex, NonConvergent,
                     PathTooClose, PoleAtBranchPoint, PrecisionLoss)


def parse_complex(value: Any):
    """Accept mpc, numbers, decimal strings or [re, im] pairs"""
    if isinstance(value, (list, tuple)):
        re, im = value
        return mp.mpc(mp.mpmathify(re), mp.mpmathify(im))
    return mp.mpc(mp.mpmathify(value))


@dataclass(frozen=True)
class CurveSpec:
    """
    Curve data: cover degree N, block size m and the Nm branch-point projections

    Args:
        N: cover degree, at least 2
        m: block size, at least 1
        lambdas: the λ_j as mpc values, λ_1 first
        precision_bits: working mantissa size for everything computed on this curve
    """

    N: int
    m: int
    lambdas: Tuple[Any, ...]
    precision_bits: int = config.DEFAULT_PRECISION_BITS

    @property
    def degree(self) -> int:
        return self.N * self.m

    @property
    def genus(self) -> int:
        return (self.N - 1) * (self.N * self.m - 2) // 2

    @property
    def L(self) -> int:
        return (self.N - 1) * self.m - 1

    def lam(self, i: int):
        return self.lambdas[i - 1]

    @cached_property
    def min_distance(self):
        with mp.workprec(self.precision_bits):
            n = self.degree
            return min(abs(self.lambdas[i] - self.lambdas[j]) for i in range(n) for j in range(i + 1, n))

    @cached_property
    def diameter(self):
        with mp.workprec(self.precision_bits):
            n = self.degree
            return max(abs(self.lambdas[i] - self.lambdas[j]) for i in range(n) for j in range(i + 1, n))

    @cached_property
    def clearance(self):
        return self.min_distance * config.PATH_CLEARANCE

    @cached_property
    def omega(self):
        with mp.workprec(self.precision_bits):
            return mp.expj(2 * mp.pi / self.N)

    @cached_property
    def base_point(self):
        """Im z₀ lies strictly above all branch points"""
        with mp.workprec(self.precision_bits):
            centre = sum((l.real for l in self.lambdas), mp.mpf(0)) / self.degree
            top = max(l.imag for l in self.lambdas)
            return mp.mpc(centre, top + max(self.diameter, mp.mpf(1)))

    @cached_property
    def base_logs(self) -> Tuple[Any, ...]:
        """Factor logs at z₀ summing to the principal Log f(z₀)"""
        with mp.workprec(self.precision_bits):
            z0 = self.base_point
            rest = [mp.log(z0 - l) for l in self.lambdas[1:]]
            first = mp.log(self.f(z0)) - sum(rest, mp.mpc(0))
            return tuple([first] + rest)

    def f(self, z):
        result = mp.mpc(1)
        for l in self.lambdas:
            result *= z - l
        return result

    def fprime(self, p: int):
        return fprime_at(self.lambdas, p)

    def with_lambdas(self, lambdas: Sequence[Any]) -> 'CurveSpec':
        return validate_curve(self.N, self.m, lambdas, self.precision_bits)

    def to_json(self) -> dict:
        digits = decimal_digits(self.precision_bits)
        return {
            "N": self.N,
            "m": self.m,
            "lambdas": [[mp.nstr(l.real, digits), mp.nstr(l.imag, digits)] for l in self.lambdas],
            "precision_bits": self.precision_bits,
        }


@dataclass(frozen=True)
class SheetPoint:
    """A point (z, s) of the curve with its sheet label"""

    z: Any
    sheet: int
    s: Any


@dataclass(frozen=True)
class BranchPoint:
    """Q_p, with local coordinate t = (z - λ_p)^{1/N}"""

    p: int


def decimal_digits(bits: int) -> int:
    return int(bits * 0.30103) + 2


def validate_curve(N: int, m: int, lambdas: Sequence[Any],
                   precision_bits: int = config.DEFAULT_PRECISION_BITS) -> CurveSpec:
    """Build a CurveSpec, rejecting wrong counts and colliding branch points"""
    if int(N) != N or N < 2:
        raise InvalidIndex(f"N must be an integer >= 2, got {N}")
    if int(m) != m or m < 1:
        raise InvalidIndex(f"m must be an integer >= 1, got {m}")
    if precision_bits < config.MIN_PRECISION_BITS:
        raise InvalidIndex(f"precision_bits must be >= {config.MIN_PRECISION_BITS}")
    if len(lambdas) != N * m:
        raise BadCount(f"expected {N * m} branch points, got {len(lambdas)}")
    with mp.workprec(precision_bits):
        values = tuple(parse_complex(l) for l in lambdas)
        diameter = max((abs(a - b) for a in values for b in values), default=mp.mpf(0))
        scale = max(diameter, mp.mpf(1))
        for i in range(len(values)):
            for j in range(i + 1, len(values)):
                if abs(values[i] - values[j]) <= config.COLLISION_TOLERANCE * scale:
                    raise DuplicateBranchPoint(f"λ_{i + 1} and λ_{j + 1} coincide")
    return CurveSpec(int(N), int(m), values, precision_bits)


# Path segments

def segment_distance(a, b, x):
    """Distance from x to the segment [a, b]"""
    d = b - a
    if d == 0:
        return abs(x - a)
    t = ((x - a) * mp.conj(d)).real / abs(d) ** 2
    t = min(max(t, mp.mpf(0)), mp.mpf(1))
    return abs(a + d * t - x)


@dataclass(frozen=True)
class LineSegment:
    start: Any
    end: Any

    @property
    def length(self):
        return abs(self.end - self.start)

    def point(self, u):
        return self.start + (self.end - self.start) * u

    def velocity(self, u):
        return self.end - self.start

    def distance_to(self, x):
        return segment_distance(self.start, self.end, x)

    def advance(self, spec: CurveSpec, logs: Sequence[Any], u=1) -> Tuple[Any, ...]:
        z = self.point(u)
        a = self.start
        return tuple(L + mp.log((z - l) / (a - l)) for L, l in zip(logs, spec.lambdas))


@dataclass(frozen=True)
class ArcSegment:
    """Arc of radius `radius` around the branch point `index`, angles in radians"""

    index: int
    center: Any
    radius: Any
    theta0: Any
    theta1: Any

    @property
    def start(self):
        return self.point(0)

    @property
    def end(self):
        return self.point(1)

    @property
    def length(self):
        return abs(self.theta1 - self.theta0) * self.radius

    def angle(self, u):
        return self.theta0 + (self.theta1 - self.theta0) * u

    def point(self, u):
        return self.center + self.radius * mp.expj(self.angle(u))

    def velocity(self, u):
        return 1j * (self.theta1 - self.theta0) * self.radius * mp.expj(self.angle(u))

    def distance_to(self, x):
        return abs(abs(x - self.center) - self.radius)

    def advance(self, spec: CurveSpec, logs: Sequence[Any], u=1) -> Tuple[Any, ...]:
        z = self.point(u)
        a = self.start
        out = []
        for j, (L, l) in enumerate(zip(logs, spec.lambdas), start=1):
            if j == self.index:
                out.append(L + 1j * (self.angle(u) - self.theta0))
            else:
                out.append(L + mp.log((z - l) / (a - l)))
        return tuple(out)


Segment = Union[LineSegment, ArcSegment]


def segment_clearance(spec: CurveSpec, segment: Segment):
    return min(segment.distance_to(l) for l in spec.lambdas)


def check_segments(spec: CurveSpec, segments: Sequence[Segment]) -> None:
    """PathTooClose on a clearance violation, PrecisionLoss if the argument budget runs out"""
    eps = mp.mpf(2) ** (-mp.prec)
    budget = mp.mpf(0)
    for seg in segments:
        dists = [seg.distance_to(l) for l in spec.lambdas]
        if min(dists) < spec.clearance:
            raise PathTooClose(f"path passes within {mp.nstr(min(dists), 5)} of a branch point")
        budget += eps * sum(seg.length / d for d in dists)
    if budget > mp.pi / spec.N:
        raise PrecisionLoss("accumulated argument uncertainty exceeds π/N")


def s_from_logs(spec: CurveSpec, logs: Sequence[Any]):
    return mp.exp(sum(logs, mp.mpc(0)) / spec.N)


def declared_path(spec: CurveSpec, z) -> List[Any]:
    """Straight path from the base point, or a single-waypoint detour when that is blocked"""
    with mp.workprec(spec.precision_bits):
        z0 = spec.base_point
        direct = LineSegment(z0, z)
        if segment_clearance(spec, direct) >= spec.clearance:
            return [z0, z]
        nearest = min(abs(z - l) for l in spec.lambdas)
        best = None
        for scale in (mp.mpf(1) / 2, mp.mpf(1) / 4):
            for k in range(12):
                w = z + nearest * scale * mp.expj(mp.pi * k / 6)
                gap = min(segment_clearance(spec, LineSegment(z0, w)),
                          segment_clearance(spec, LineSegment(w, z)))
                if best is None or gap > best[0]:
                    best = (gap, w)
        if best is None or best[0] < spec.clearance:
            raise PathTooClose(f"no clear declared path to {mp.nstr(z, 8)}")
        return [z0, best[1], z]


@lru_cache(maxsize=8192)
def _canonical_logs(spec: CurveSpec, z, sheet: int, prec: int) -> Tuple[Any, ...]:
    with mp.workprec(prec):
        path = declared_path(spec, z)
        logs = spec.base_logs
        for a, b in zip(path[:-1], path[1:]):
            logs = LineSegment(a, b).advance(spec, logs)
        shift = 2j * mp.pi * (sheet % spec.N)
        return (logs[0] + shift,) + tuple(logs[1:])


def canonical_logs(spec: CurveSpec, z, sheet: int = 0) -> Tuple[Any, ...]:
    """Factor logs at z on the given sheet, continued along the declared path"""
    return _canonical_logs(spec, mp.mpc(z), int(sheet), mp.prec)


def sheet_of(spec: CurveSpec, z, s) -> int:
    s0 = s_from_logs(spec, canonical_logs(spec, z, 0))
    ratio = s / s0
    k = int(mp.nint(mp.arg(ratio) * spec.N / (2 * mp.pi))) % spec.N
    if abs(ratio / abs(ratio) - spec.omega ** k) > mp.mpf(10) ** -6:
        raise PrecisionLoss(f"s value at {mp.nstr(z, 8)} is not on any sheet")
    return k


def sheet_point(spec: CurveSpec, z, sheet: int = 0) -> SheetPoint:
    with mp.workprec(spec.precision_bits):
        z = parse_complex(z)
        return SheetPoint(z, sheet % spec.N, s_from_logs(spec, canonical_logs(spec, z, sheet)))


def continue_segments(spec: CurveSpec, segments: Sequence[Segment], logs: Sequence[Any]) -> Tuple[Any, ...]:
    check_segments(spec, segments)
    for seg in segments:
        logs = seg.advance(spec, logs)
    return tuple(logs)


def continue_s(spec: CurveSpec, path: Sequence[Any], start: SheetPoint) -> SheetPoint:
    """Continue s along a polyline starting at start.z and return the endpoint"""
    with mp.workprec(spec.precision_bits):
        points = [parse_complex(z) for z in path]
        if len(points) < 2 or abs(points[0] - start.z) > spec.clearance * mp.mpf(10) ** -6:
            raise InvalidIndex("path must start at the start point and have at least two vertices")
        segments = [LineSegment(a, b) for a, b in zip(points[:-1], points[1:])]
        logs = continue_segments(spec, segments, canonical_logs(spec, start.z, start.sheet))
        z = points[-1]
        s = s_from_logs(spec, logs)
        return SheetPoint(z, sheet_of(spec, z, s), s)


def monodromy(spec: CurveSpec, p: int) -> List[int]:
    """Sheet permutation of a small counterclockwise loop around λ_p"""
    with mp.workprec(spec.precision_bits):
        r = spec.min_distance / 4
        arc = ArcSegment(p, spec.lam(p), r, mp.mpf(0), 2 * mp.pi)
        out = []
        for k in range(spec.N):
            logs = continue_segments(spec, [arc], canonical_logs(spec, arc.start, k))
            out.append(sheet_of(spec, arc.end, s_from_logs(spec, logs)))
        return out


# Local expansions at branch points

def branch_root(spec: CurveSpec, p: int):
    """c_p = exp(Σ_{j≠p} Log(λ_p - λ_j) / N), the fixed N-th root of f'(λ_p)"""
    lp = spec.lam(p)
    return mp.exp(sum((mp.log(lp - l) for j, l in enumerate(spec.lambdas, start=1) if j != p),
                      mp.mpc(0)) / spec.N)


def local_logs(spec: CurveSpec, p: int, t) -> Tuple[Any, ...]:
    """Factor logs at z = λ_p + t^N, consistent with s = t·c_p·(1 + O(t^N))"""
    lp = spec.lam(p)
    z = lp + t ** spec.N
    out = []
    for j, l in enumerate(spec.lambdas, start=1):
        if j == p:
            out.append(spec.N * mp.log(t))
        else:
            out.append(mp.log(lp - l) + mp.log((z - l) / (lp - l)))
    return tuple(out)


def local_factor(spec: CurveSpec, p: int, form, t):
    N = spec.N
    z = spec.lam(p) + t ** N
    coeff = form.coefficient(spec, z, local_logs(spec, p, t))
    if getattr(form, 'weight', 1) == 1:
        return coeff * N * t ** (N - 1)
    return coeff * mp.sqrt(N) * mp.exp(mp.mpf(N - 1) / 2 * mp.log(t))


def _fourier_modes(spec: CurveSpec, p: int, form, rho, orders: Sequence[int]):
    M = config.BRANCH_SAMPLES
    samples = []
    for k in range(M):
        t = rho * mp.expj(2 * mp.pi * (k + mp.mpf(1) / 2) / M)
        samples.append((t, local_factor(spec, p, form, t)))
    modes = {}
    for j in orders:
        # coefficient of t^j, scaled to its size on the circle
        modes[j] = sum((g * (t / rho) ** (-j) for t, g in samples), mp.mpc(0)) / M
    scale = max(abs(g) for _, g in samples)
    return modes, scale


def local_value_at_branch(spec: CurveSpec, p: int, form, radius=None):
    """
    Coefficient of dt (√dt for half-forms) at t = 0 in the local coordinate at Q_p

    The zero Fourier mode on two circles |t| = ρ and ρ/2 is Richardson-combined;
    negative modes above noise mean the form has a pole at Q_p.
    """
    if not 1 <= p <= spec.degree:
        raise InvalidIndex(f"branch index {p} outside 1..{spec.degree}")
    with mp.workprec(spec.precision_bits):
        lp = spec.lam(p)
        nearest = min(abs(lp - l) for j, l in enumerate(spec.lambdas, start=1) if j != p)
        rho = radius if radius is not None else nearest ** (mp.mpf(1) / spec.N) / 4
        orders = [0] + [-j for j in range(1, spec.N + 2)]
        coarse, scale_coarse = _fourier_modes(spec, p, form, rho, orders)
        fine, scale_fine = _fourier_modes(spec, p, form, rho / 2, orders)
        noise = mp.mpf(2) ** (-(spec.precision_bits // 2))
        for j in orders[1:]:
            if abs(fine[j]) > noise * scale_fine:
                raise PoleAtBranchPoint(f"form has a t^{j} term at Q_{p}")
        M = config.BRANCH_SAMPLES
        v1, v2 = coarse[0], fine[0]
        if abs(v2 - v1) > noise * max(scale_coarse, abs(v2)):
            raise NonConvergent(f"local value at Q_{p} unstable under radius halving")
        return v2 + (v2 - v1) / (mp.mpf(2) ** M - 1)
