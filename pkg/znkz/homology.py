"""
Cycles on the Z_N curve, their intersection pairing and a canonical symplectic basis

Elementary cycles γ_{j,k} are figure-eights around two chain-adjacent branch
points: out along one leg on sheet k, around the far branch point, back on
sheet k+1 and around the near branch point. Their geometry is frozen in a
CycleCode so the same cycles can be regenerated after moving the λ_j.
"""

from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from mpmath import mp

from . import config
from .curve import (ArcSegment, CurveSpec, LineSegment, Segment, check_segments,
                    s_from_logs, segment_distance)
from .errors import GenusZero, NonClosedCycle, PathTooClose, RankDeficient, StepTooLarge

GOLDEN = 0.6180339887498949


@dataclass(frozen=True)
class CycleCode:
    """
    Combinatorial description of one elementary cycle

    Args:
        edge: chain position j, the loop encircles chain points j and j+1
        sheet: starting sheet k
        near: branch index of chain point j
        far: branch index of chain point j+1
        radius: absolute arc radius
        angle: leg tilt φ in radians
    """

    edge: int
    sheet: int
    near: int
    far: int
    radius: Any
    angle: Any

    @property
    def windings(self) -> Tuple[Tuple[int, int], Tuple[int, int]]:
        return ((self.far, 1), (self.near, -1))

    def to_json(self) -> Dict[str, Any]:
        return {
            "edge": self.edge,
            "sheet": self.sheet,
            "near": self.near,
            "far": self.far,
            "radius": mp.nstr(self.radius, 20),
            "angle": mp.nstr(self.angle, 20),
            "windings": [list(w) for w in self.windings],
        }


@dataclass(frozen=True)
class Cycle:
    code: CycleCode
    segments: Tuple[Segment, ...]
    start_logs: Tuple[Any, ...]

    @property
    def start(self):
        return self.segments[0].start

    @property
    def start_sheet(self) -> int:
        return self.code.sheet


@dataclass(frozen=True)
class CycleLayout:
    """Chain order and the per-cycle radii/angles, fixed at the reference λ"""

    order: Tuple[int, ...]
    rho: Any
    codes: Tuple[CycleCode, ...]


def chain_order(spec: CurveSpec) -> Tuple[int, ...]:
    """Branch indices sorted by (Re λ, Im λ)"""
    return tuple(sorted(range(1, spec.degree + 1),
                        key=lambda i: (spec.lam(i).real, spec.lam(i).imag)))


def chain_radius(spec: CurveSpec, order: Sequence[int]):
    """ρ: a third of the tighter of the minimum λ distance and twice the corridor clearance"""
    gap = spec.min_distance
    for a, b in zip(order[:-1], order[1:]):
        for q in order:
            if q in (a, b):
                continue
            gap = min(gap, 2 * segment_distance(spec.lam(a), spec.lam(b), spec.lam(q)))
    return gap / 3


def build_layout(spec: CurveSpec) -> CycleLayout:
    if spec.genus < 1:
        raise GenusZero(f"(N={spec.N}, m={spec.m}) has genus 0")
    with mp.workprec(spec.precision_bits):
        order = chain_order(spec)
        rho = chain_radius(spec, order)
        count = (spec.degree - 1) * (spec.N - 1)
        codes = []
        for j in range(1, spec.degree):
            for k in range(spec.N - 1):
                idx = (j - 1) * (spec.N - 1) + k
                radius = rho * (mp.mpf(3) / 10 + mp.mpf(6) / 10 * (idx + 1) / (count + 1))
                angle = mp.mpf(1) / 4 + mp.mpf((idx * GOLDEN) % 1.0) / 2
                codes.append(CycleCode(j, k, order[j - 1], order[j], radius, angle))
        return CycleLayout(order, rho, tuple(codes))


def _start_logs(spec: CurveSpec, code: CycleCode, z) -> Tuple[Any, ...]:
    """Logs at the start point, continued locally from λ_near and shifted to sheet k"""
    a = spec.lam(code.near)
    out = []
    for j, l in enumerate(spec.lambdas, start=1):
        if j == code.near:
            out.append(mp.log(z - a) + 2j * mp.pi * code.sheet)
        else:
            out.append(mp.log(a - l) + mp.log((z - l) / (a - l)))
    return tuple(out)


def realize_cycle(spec: CurveSpec, code: CycleCode) -> Cycle:
    """Segments of the figure-eight for the current λ"""
    with mp.workprec(spec.precision_bits):
        a, b = spec.lam(code.near), spec.lam(code.far)
        r, phi = code.radius, code.angle
        theta = mp.arg(b - a)
        if 2 * r >= abs(b - a):
            raise StepTooLarge(f"cycle radius no longer fits between λ_{code.near} and λ_{code.far}")
        a_up = a + r * mp.expj(theta + phi)
        b_dn = b + r * mp.expj(theta + mp.pi + phi)
        b_up = b + r * mp.expj(theta + mp.pi - phi)
        a_dn = a + r * mp.expj(theta - phi)
        segments = (
            LineSegment(a_up, b_dn),
            ArcSegment(code.far, b, r, theta + mp.pi + phi, theta + 3 * mp.pi - phi),
            LineSegment(b_up, a_dn),
            ArcSegment(code.near, a, r, theta - phi, theta + phi - 2 * mp.pi),
        )
        return Cycle(code, segments, _start_logs(spec, code, a_up))


def close_cycle(spec: CurveSpec, cycle: Cycle) -> Tuple[Any, ...]:
    """Continue around the cycle; NonClosedCycle unless s returns to its start value"""
    with mp.workprec(spec.precision_bits):
        logs = cycle.start_logs
        check_segments(spec, cycle.segments)
        for seg in cycle.segments:
            logs = seg.advance(spec, logs)
        s0 = s_from_logs(spec, cycle.start_logs)
        s1 = s_from_logs(spec, logs)
        if abs(s1 - s0) > abs(s0) * mp.mpf(2) ** (-(spec.precision_bits // 2)):
            raise NonClosedCycle(f"cycle {cycle.code.edge},{cycle.code.sheet} does not close")
        return logs


def elementary_cycles(spec: CurveSpec, layout: Optional[CycleLayout] = None) -> List[Cycle]:
    """The (N-1)(Nm-1) loops γ_{j,k}, j = 1..Nm-1, k = 0..N-2"""
    layout = layout or build_layout(spec)
    cycles = [realize_cycle(spec, code) for code in layout.codes]
    for c in cycles:
        close_cycle(spec, c)
    return cycles


# Intersection numbers

def polyline(spec: CurveSpec, cycle: Cycle) -> Tuple[np.ndarray, np.ndarray]:
    """Vertices of the cycle (arcs as chords) and the factor logs at each vertex"""
    points = []
    logs_out = []
    with mp.workprec(spec.precision_bits):
        logs = cycle.start_logs
        for seg in cycle.segments:
            steps = 1 if isinstance(seg, LineSegment) else config.ARC_CHORDS
            for i in range(steps):
                u = mp.mpf(i) / steps
                here = seg.advance(spec, logs, u) if i else logs
                points.append(complex(seg.point(u)))
                logs_out.append([complex(L) for L in here])
            logs = seg.advance(spec, logs)
        points.append(complex(cycle.start))
        logs_out.append([complex(L) for L in logs])
    return np.array(points), np.array(logs_out)


def _cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (np.conj(a) * b).imag


def _s_at(lambdas: np.ndarray, vertex: complex, logs: np.ndarray, z: complex, N: int) -> complex:
    moved = logs + np.log((z - lambdas) / (vertex - lambdas))
    return np.exp(moved.sum() / N)


def pair_intersection(spec: CurveSpec, x: Tuple[np.ndarray, np.ndarray],
                      y: Tuple[np.ndarray, np.ndarray]) -> int:
    """Signed count of same-sheet crossings of two polylines"""
    (px, lx), (py, ly) = x, y
    lambdas = np.array([complex(l) for l in spec.lambdas])
    p0, p1 = px[:-1], px[1:]
    q0, q1 = py[:-1], py[1:]
    d1 = (p1 - p0)[:, None]
    d2 = (q1 - q0)[None, :]
    w = q0[None, :] - p0[:, None]
    den = _cross(d1, d2)
    with np.errstate(divide='ignore', invalid='ignore'):
        t = _cross(w, d2) / den
        u = _cross(w, d1) / den
    hits = (den != 0) & (t >= 0) & (t < 1) & (u >= 0) & (u < 1)
    omega_gap = abs(1 - np.exp(2j * np.pi / spec.N)) / 2
    total = 0
    for i, j in zip(*np.nonzero(hits)):
        z = p0[i] + t[i, j] * (p1[i] - p0[i])
        sx = _s_at(lambdas, p0[i], lx[i], z, spec.N)
        sy = _s_at(lambdas, q0[j], ly[j], z, spec.N)
        if abs(sx - sy) < omega_gap * abs(sx):
            total += 1 if den[i, j] > 0 else -1
    return total


def intersection_matrix(spec: CurveSpec, cycles: Sequence[Cycle]) -> np.ndarray:
    """Antisymmetric integer pairing of the given closed cycles"""
    for c in cycles:
        close_cycle(spec, c)
    lines = [polyline(spec, c) for c in cycles]
    n = len(cycles)
    K = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        for j in range(i + 1, n):
            K[i, j] = pair_intersection(spec, lines[i], lines[j])
            K[j, i] = -K[i, j]
    return K


# Symplectic reduction

@dataclass(frozen=True)
class IntersectionData:
    """
    Elementary cycles, their pairing and the unimodular change to a canonical basis

    Rows 0..g-1 of `transform` are A_1..A_g, rows g..2g-1 are B_1..B_g, the rest
    are null combinations, all as integer combinations of the elementary cycles.
    """

    layout: CycleLayout
    cycles: Tuple[Cycle, ...]
    pairing: np.ndarray
    transform: np.ndarray
    genus: int
    lambdas: Tuple[Any, ...] = ()

    @property
    def a_rows(self) -> np.ndarray:
        return self.transform[:self.genus]

    @property
    def b_rows(self) -> np.ndarray:
        return self.transform[self.genus:2 * self.genus]

    @property
    def null_rows(self) -> np.ndarray:
        return self.transform[2 * self.genus:]

    @property
    def symplectic_transform(self) -> np.ndarray:
        return self.transform[:2 * self.genus]

    def flipped(self) -> 'IntersectionData':
        """Same basis with every B_i replaced by -B_i"""
        T = self.transform.copy()
        T[self.genus:2 * self.genus] *= -1
        return IntersectionData(self.layout, self.cycles, self.pairing, T, self.genus, self.lambdas)


def symplectic_reduction(K: np.ndarray) -> Tuple[np.ndarray, List[Tuple[int, int]], int]:
    """
    Unimodular congruence bringing an antisymmetric integer matrix to block form

    Returns:
        (transform rows, list of (A row, B row) pairs, rank)
    """
    K = [[int(v) for v in row] for row in np.asarray(K)]
    n = len(K)
    T = [[int(i == j) for j in range(n)] for i in range(n)]

    def swap(i, j):
        if i == j:
            return
        K[i], K[j] = K[j], K[i]
        for row in K:
            row[i], row[j] = row[j], row[i]
        T[i], T[j] = T[j], T[i]

    def add(i, j, c):
        # e_i <- e_i + c e_j
        K[i] = [a + c * b for a, b in zip(K[i], K[j])]
        for row in K:
            row[i] += c * row[j]
        T[i] = [a + c * b for a, b in zip(T[i], T[j])]

    t = 0
    while t + 1 < n:
        best = None
        for i in range(t, n):
            for j in range(i + 1, n):
                if K[i][j] and (best is None or abs(K[i][j]) < best[0]):
                    best = (abs(K[i][j]), i, j)
        if best is None:
            break
        _, i, j = best
        swap(t, i)
        swap(t + 1, j)
        if K[t][t + 1] < 0:
            swap(t, t + 1)
        while True:
            d = K[t][t + 1]
            settled = True
            for k in range(t + 2, n):
                c = K[t][k] // d
                if c:
                    add(k, t + 1, -c)
                c = K[t + 1][k] // d
                if c:
                    add(k, t, c)
                if K[t][k]:
                    swap(t + 1, k)
                    settled = False
                    break
                if K[t + 1][k]:
                    swap(t, k)
                    if K[t][t + 1] < 0:
                        swap(t, t + 1)
                    settled = False
                    break
            if settled:
                break
        t += 2
    pairs = [(b, b + 1) for b in range(0, t, 2)]
    for a, b in pairs:
        if K[a][b] != 1:
            raise RankDeficient(f"pairing is not unimodular: elementary divisor {K[a][b]}")
    return np.array(T, dtype=np.int64), pairs, t


def canonical_basis(spec: CurveSpec, cycles: Sequence[Cycle], pairing: np.ndarray,
                    layout: Optional[CycleLayout] = None) -> IntersectionData:
    """Canonical A_1..A_g, B_1..B_g as integer combinations of the given cycles"""
    T, pairs, rank = symplectic_reduction(pairing)
    g = spec.genus
    if rank != 2 * g:
        raise RankDeficient(f"pairing rank {rank} != 2g = {2 * g}")

    def lead(row):
        return next(i for i, v in enumerate(row) if v)

    pairs = sorted(pairs, key=lambda ab: lead(T[ab[0]]))
    a_rows = [T[a] for a, _ in pairs]
    b_rows = [T[b] for _, b in pairs]
    rest = [T[i] for i in range(rank, len(T))]
    transform = np.array(a_rows + b_rows + rest, dtype=np.int64).reshape(len(T), len(T))
    layout = layout or CycleLayout(tuple(), mp.mpf(0), tuple(c.code for c in cycles))
    return IntersectionData(layout, tuple(cycles), np.asarray(pairing, dtype=np.int64), transform, g,
                            tuple(spec.lambdas))


def build_intersection_data(spec: CurveSpec) -> IntersectionData:
    layout = build_layout(spec)
    cycles = elementary_cycles(spec, layout)
    K = intersection_matrix(spec, cycles)
    return canonical_basis(spec, cycles, K, layout)


def regenerate(spec: CurveSpec, data: IntersectionData) -> IntersectionData:
    """
    Same cycle codes, pairing and transform realized at new λ

    StepTooLarge when a branch point moved by more than half the smallest arc
    radius, since the regenerated loops are then no longer guaranteed homotopic.
    """
    with mp.workprec(spec.precision_bits):
        moved = max(abs(a - b) for a, b in zip(spec.lambdas, data.lambdas))
        smallest = min(c.code.radius for c in data.cycles)
        if moved >= smallest / 2:
            raise StepTooLarge(f"λ moved by {mp.nstr(moved, 5)}, cycle radius {mp.nstr(smallest, 5)}")
        cycles = []
        for c in data.cycles:
            cycle = realize_cycle(spec, c.code)
            try:
                close_cycle(spec, cycle)
            except PathTooClose as e:
                raise StepTooLarge(f"perturbed cycle {c.code.edge},{c.code.sheet}: {e}")
            cycles.append(cycle)
        return IntersectionData(data.layout, tuple(cycles), data.pairing, data.transform,
                                data.genus, tuple(spec.lambdas))


def standard_form(data: IntersectionData) -> np.ndarray:
    """T K Tᵀ restricted to the symplectic rows"""
    S = data.symplectic_transform
    return S @ data.pairing @ S.T


def coordinates(data: IntersectionData, x: np.ndarray) -> Tuple[np.ndarray, bool]:
    """
    Canonical coordinates (a, b) of an elementary-cycle combination x

    Returns:
        (integer vector of length 2g, True when the remainder pairs to zero with everything)
    """
    K = data.pairing
    sign = int(data.a_rows[0] @ K @ data.b_rows[0])
    a = sign * (data.b_rows @ (K.T @ x))
    b = -sign * (data.a_rows @ (K.T @ x))
    remainder = x - a @ data.a_rows - b @ data.b_rows
    return np.concatenate([a, b]), not np.any(K @ remainder)


def deck_action(spec: CurveSpec, data: IntersectionData) -> np.ndarray:
    """Integer matrix of the sheet shift φ on the canonical basis (rows are images)"""
    n = len(data.cycles)
    index = {(c.code.edge, c.code.sheet): i for i, c in enumerate(data.cycles)}
    shift = np.zeros((n, n), dtype=np.int64)
    for (edge, k), i in index.items():
        if k + 1 < spec.N - 1:
            shift[i, index[(edge, k + 1)]] = 1
        else:
            for kk in range(spec.N - 1):
                shift[i, index[(edge, kk)]] = -1
    rows = []
    for basis_row in data.symplectic_transform:
        coords, clean = coordinates(data, basis_row @ shift)
        if not clean:
            raise RankDeficient("sheet shift of a basis cycle left a non-null remainder")
        rows.append(coords)
    return np.array(rows, dtype=np.int64)


def export_cycles(spec: CurveSpec, cycles: Sequence[Cycle]) -> List[Dict[str, Any]]:
    """Codes plus polyline samples, for external plotting"""
    out = []
    for c in cycles:
        pts, _ = polyline(spec, c)
        out.append({
            "code": c.code.to_json(),
            "polyline": [[repr(float(z.real)), repr(float(z.imag))] for z in pts],
        })
    return out
