"""
Adaptive Gauss-Legendre quadrature of vector integrands along path segments
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Callable, List, Sequence, Tuple

from mpmath import mp

from . import config
from .curve import CurveSpec, segment_distance
from .errors import NoConvergence

# integrand(z, logs) -> list of coefficients relative to dz
Integrand = Callable[[Any, Tuple[Any, ...]], List[Any]]


@lru_cache(maxsize=16)
def gauss_legendre(order: int, prec: int) -> Tuple[Tuple[Any, ...], Tuple[Any, ...]]:
    """Nodes and weights on [-1, 1]"""
    with mp.workprec(prec):
        nodes, weights = mp.gauss_quadrature(order, "legendre")
        return tuple(nodes), tuple(weights)


@dataclass(frozen=True)
class EndpointLeg:
    """
    Straight leg from `start` into the branch point λ_index

    Parametrized as z = λ + (start - λ)(1 - u)^N so that forms with an
    integrable (z - λ)^{-α/N} singularity become smooth in u.
    """

    start: Any
    center: Any
    index: int
    N: int

    @property
    def end(self):
        return self.center

    @property
    def length(self):
        return abs(self.start - self.center)

    def point(self, u):
        return self.center + (self.start - self.center) * (1 - u) ** self.N

    def velocity(self, u):
        return -self.N * (self.start - self.center) * (1 - u) ** (self.N - 1)

    def distance_to(self, x):
        return segment_distance(self.start, self.center, x)

    def advance(self, spec: CurveSpec, logs: Sequence[Any], u=1) -> Tuple[Any, ...]:
        z = self.point(u)
        out = []
        for j, (L, l) in enumerate(zip(logs, spec.lambdas), start=1):
            if j == self.index:
                out.append(L + self.N * mp.log(1 - u))
            else:
                out.append(L + mp.log((z - l) / (self.start - l)))
        return tuple(out)


def _panel(spec: CurveSpec, segment, logs, integrand: Integrand, u0, u1) -> List[Any]:
    nodes, weights = gauss_legendre(config.QUADRATURE_ORDER, mp.prec)
    half = (u1 - u0) / 2
    mid = (u1 + u0) / 2
    total = None
    for x, w in zip(nodes, weights):
        u = mid + half * x
        z = segment.point(u)
        values = integrand(z, segment.advance(spec, logs, u))
        scale = w * half * segment.velocity(u)
        if total is None:
            total = [scale * v for v in values]
        else:
            total = [t + scale * v for t, v in zip(total, values)]
    return total


def integrate_segment(spec: CurveSpec, segment, logs: Sequence[Any], integrand: Integrand,
                      tol=None) -> Tuple[List[Any], Any]:
    """
    Integral of a vector integrand along one segment

    Each panel is compared with the sum of its halves; a panel is accepted
    when the largest component difference is below tol times the running scale.

    Returns:
        (integral vector, error estimate)
    """
    if tol is None:
        tol = mp.mpf(config.tolerance(mp.prec))
    zero = mp.mpf(0)
    stack = [(zero, mp.mpf(1), _panel(spec, segment, logs, integrand, zero, mp.mpf(1)), 0)]
    total = None
    err = mp.mpf(0)
    while stack:
        u0, u1, whole, depth = stack.pop()
        mid = (u0 + u1) / 2
        left = _panel(spec, segment, logs, integrand, u0, mid)
        right = _panel(spec, segment, logs, integrand, mid, u1)
        halves = [a + b for a, b in zip(left, right)]
        diff = max(abs(a - b) for a, b in zip(whole, halves))
        scale = max(max(abs(h) for h in halves), mp.mpf(1) if total is None else max(abs(t) for t in total))
        if diff <= tol * scale or diff == 0:
            total = halves if total is None else [t + h for t, h in zip(total, halves)]
            err += diff
            continue
        if depth >= config.MAX_PANEL_DEPTH:
            raise NoConvergence(f"quadrature did not converge after {depth} panel halvings")
        stack.append((mid, u1, right, depth + 1))
        stack.append((u0, mid, left, depth + 1))
    if config.LOG_QUADRATURE:
        print(f"  segment integral done, error estimate {mp.nstr(err, 5)}")
    return total, err


def integrate_path(spec: CurveSpec, segments: Sequence[Any], logs: Sequence[Any],
                   integrand: Integrand, tol=None) -> Tuple[List[Any], Any, Tuple[Any, ...]]:
    """
    Integrate along consecutive segments, continuing the factor logs

    Returns:
        (integral vector, summed error estimate, logs at the end point)
    """
    total = None
    err = mp.mpf(0)
    logs = tuple(logs)
    for seg in segments:
        part, e = integrate_segment(spec, seg, logs, integrand, tol)
        total = part if total is None else [t + p for t, p in zip(total, part)]
        err += e
        if isinstance(seg, EndpointLeg):
            logs = None
        else:
            logs = seg.advance(spec, logs)
    return total, err, logs
