"""
Period matrices of the Z_N curve

Every elementary loop is integrated once against a moment vector holding all
the integrands the engine needs; cycle periods of holomorphic forms, μ_p and
ζ_j are then exact linear combinations of those moments.
"""

import json
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from typing import Any, List, Optional, Sequence, Tuple

import numpy as np
from mpmath import mp
from tqdm import tqdm

from . import cache, config
from .algebra import g_outside, poly_from_roots, zeta_polynomial
from .curve import CurveSpec, branch_root, local_value_at_branch
from .differentials import ExactPart, Holo, Mu, SpinF, Zeta, holomorphic_basis
from .errors import (GenusZero, InvalidIndex, NotNegativeDefinite, PathTooClose, PoleOnPath,
                     SingularAMatrix)
from .homology import Cycle, IntersectionData
from .quadrature import integrate_path


@dataclass(frozen=True)
class MomentLayout:
    """
    Slots of the per-loop moment vector

    holo: (α, β) of z^{β-1} dz/s^α in holomorphic_basis order
    powers: z^k dz/s for k = 0..Nm-2
    poles: z^k dz/((z - λ_p) s) for p = 1..Nm, k = 0..m-1
    """

    N: int
    m: int
    holo: Tuple[Tuple[int, int], ...]

    @classmethod
    def for_curve(cls, spec: CurveSpec) -> 'MomentLayout':
        return cls(spec.N, spec.m, tuple((h.alpha, h.beta) for h in holomorphic_basis(spec)))

    @property
    def power_count(self) -> int:
        return self.N * self.m - 1

    @property
    def size(self) -> int:
        return len(self.holo) + self.power_count + self.N * self.m * self.m

    def holo_slot(self, alpha: int, beta: int) -> int:
        return self.holo.index((alpha, beta))

    def power_slot(self, k: int) -> int:
        return len(self.holo) + k

    def pole_slot(self, p: int, k: int) -> int:
        return len(self.holo) + self.power_count + (p - 1) * self.m + k


def moment_integrand(spec: CurveSpec, layout: MomentLayout):
    lams = spec.lambdas
    N = spec.N

    def integrand(z, logs):
        S = sum(logs, mp.mpc(0)) / N
        inv = [mp.exp(-a * S) for a in range(1, N)]
        zp = [mp.mpc(1)]
        for _ in range(layout.power_count):
            zp.append(zp[-1] * z)
        out = [zp[b - 1] * inv[a - 1] for a, b in layout.holo]
        out.extend(zp[k] * inv[0] for k in range(layout.power_count))
        for l in lams:
            d = inv[0] / (z - l)
            out.extend(zp[k] * d for k in range(layout.m))
        return out

    return integrand


def holomorphic_integrand(spec: CurveSpec):
    """Vector of the g holomorphic basis forms, for Abel-map legs"""
    basis = holomorphic_basis(spec)
    N = spec.N

    def integrand(z, logs):
        S = sum(logs, mp.mpc(0)) / N
        inv = [mp.exp(-a * S) for a in range(1, N)]
        return [z ** (h.beta - 1) * inv[h.alpha - 1] for h in basis]

    return integrand


def _moment_key(spec: CurveSpec, cycle: Cycle) -> str:
    return cache.get_cache_key("moments-v1", json.dumps(spec.to_json(), sort_keys=True),
                               json.dumps(cycle.code.to_json(), sort_keys=True),
                               config.QUADRATURE_ORDER, mp.prec)


def loop_moments(spec: CurveSpec, cycle: Cycle, layout: Optional[MomentLayout] = None) -> Tuple[List[Any], Any]:
    """Moment vector of one elementary loop and its quadrature error estimate"""
    layout = layout or MomentLayout.for_curve(spec)
    key = _moment_key(spec, cycle)
    cached = cache.get_cached_moments(key)
    if cached is not None:
        return cached[:-1], cached[-1].real
    try:
        values, err, _ = integrate_path(spec, cycle.segments, cycle.start_logs,
                                        moment_integrand(spec, layout))
    except PathTooClose as e:
        raise PoleOnPath(str(e))
    cache.save_moments(key, list(values) + [mp.mpc(err)])
    return values, err


def all_loop_moments(spec: CurveSpec, cycles: Sequence[Cycle],
                     workers: int = config.MAX_WORKERS) -> Tuple[List[List[Any]], Any]:
    """Moments of every elementary loop, assembled in cycle order"""
    layout = MomentLayout.for_curve(spec)
    results = [None] * len(cycles)
    errors = [None] * len(cycles)
    with mp.workprec(spec.precision_bits):
        with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
            futures = {executor.submit(loop_moments, spec, c, layout): i for i, c in enumerate(cycles)}
            with tqdm(total=len(cycles), desc="Loop integrals", disable=not config.LOG_PROGRESS) as pbar:
                for future in as_completed(futures):
                    index = futures[future]
                    results[index], errors[index] = future.result()
                    pbar.update(1)
    return results, max(errors, default=mp.mpf(0))


def integrate_cycle(spec: CurveSpec, form, cycle: Cycle, precision_bits: Optional[int] = None):
    """∫ of a differential along one cycle by adaptive quadrature"""
    if isinstance(form, SpinF):
        raise InvalidIndex("half-forms have no cycle integral")
    form.validate(spec)
    bits = precision_bits or spec.precision_bits
    with mp.workprec(bits):
        try:
            values, _, _ = integrate_path(spec, cycle.segments, cycle.start_logs,
                                          lambda z, logs: [form.coefficient(spec, z, logs)])
        except PathTooClose as e:
            raise PoleOnPath(str(e))
        return values[0]


def to_matrix(rows: Sequence[Sequence[Any]]):
    return mp.matrix([list(r) for r in rows])


@dataclass
class PeriodData:
    """
    A-periods, normalized differentials and the period matrix

    A_matrix[i][c] = ∫_{A_i} w_c over holomorphic_basis, σ = 2πi (Aᵀ)⁻¹ so that
    v_j = Σ_c σ[j][c] w_c has ∫_{A_i} v_j = 2πi δ_ij, τ[i][j] = ∫_{B_i} v_j and
    D row β-1 holds σ[j][(N-1, β)].
    """

    spec: CurveSpec
    intersection: IntersectionData
    layout: MomentLayout
    moments: List[List[Any]]
    A_matrix: Any
    B_matrix: Any
    sigma: Any
    tau: Any
    D: Any
    err: Any
    flipped: bool = False

    @property
    def genus(self) -> int:
        return self.spec.genus

    def combine(self, row: Sequence[int]) -> List[Any]:
        """Moment vector of an integer combination of elementary loops"""
        total = [mp.mpc(0)] * self.layout.size
        for c, loop in zip(row, self.moments):
            c = int(c)
            if c:
                total = [t + c * v for t, v in zip(total, loop)]
        return total

    def cycle_rows(self, kind: str) -> np.ndarray:
        if kind == 'A':
            return self.intersection.a_rows
        if kind == 'B':
            return self.intersection.b_rows
        if kind == 'null':
            return self.intersection.null_rows
        raise InvalidIndex(f"unknown cycle kind {kind}")

    def form_period(self, form, row: Sequence[int]):
        """∫ of a holomorphic, μ, ζ or exact form over a combination of loops"""
        form.validate(self.spec)
        if isinstance(form, (Holo, Zeta, Mu)):
            return self.period_of(form, self.combine(row))
        total = mp.mpc(0)
        for c, cycle in zip(row, self.intersection.cycles):
            if int(c):
                total += int(c) * integrate_cycle(self.spec, form, cycle)
        return total

    def period_of(self, form, moments: Sequence[Any]):
        """Period of a holomorphic, μ or ζ form from an already combined moment vector"""
        spec = self.spec
        if isinstance(form, Holo):
            return moments[self.layout.holo_slot(form.alpha, form.beta)]
        if isinstance(form, Zeta):
            poly = zeta_polynomial(spec.lambdas, form.partition, form.j)
            return sum((c * moments[self.layout.power_slot(k)] for k, c in enumerate(poly)), mp.mpc(0))
        if isinstance(form, Mu):
            part, p = form.partition, form.p
            block = part.block(part.block_of(p))
            lead = g_outside(spec.lambdas, block, spec.lam(p))
            poly = poly_from_roots([spec.lam(i) for i in block if i != p])
            return lead * sum((c * moments[self.layout.pole_slot(p, k)] for k, c in enumerate(poly)),
                              mp.mpc(0))
        raise InvalidIndex(f"{form} has no moment representation")

    def period(self, form, kind: str, i: int):
        """∫_{A_i} or ∫_{B_i} (1-based i) of a form"""
        return self.form_period(form, self.cycle_rows(kind)[i - 1])

    def v_coefficients(self, j: int) -> List[Any]:
        return [self.sigma[j, c] for c in range(self.genus)]


class NormalizedForm:
    """v_j as a form object, for local expansions at branch points"""

    weight = 1

    def __init__(self, periods: PeriodData, j: int):
        self.basis = holomorphic_basis(periods.spec)
        self.coeffs = periods.v_coefficients(j)

    def validate(self, spec: CurveSpec) -> 'NormalizedForm':
        return self

    def coefficient(self, spec: CurveSpec, z, logs):
        return sum((c * w.coefficient(spec, z, logs) for c, w in zip(self.coeffs, self.basis)), mp.mpc(0))


def _invert(A, bits: int):
    """Inverse with one step of iterative refinement; SingularAMatrix when ill-conditioned"""
    try:
        X = mp.inverse(A)
    except ZeroDivisionError:
        raise SingularAMatrix("A matrix is singular")
    n = A.rows
    X = X + X * (mp.eye(n) - A * X)
    cond = mp.mnorm(A, 1) * mp.mnorm(X, 1)
    if cond > mp.mpf(2) ** (bits // 2):
        raise SingularAMatrix(f"A matrix condition number {mp.nstr(cond, 5)} exceeds the precision budget")
    return X


def _real_part(M):
    return mp.matrix([[M[i, j].real for j in range(M.cols)] for i in range(M.rows)])


def definiteness(M) -> int:
    """-1 negative definite, +1 positive definite, 0 otherwise (symmetric real part)"""
    R = _real_part(M)
    R = (R + R.T) / 2
    eigenvalues, _ = mp.eigsy(R)
    values = [eigenvalues[i] for i in range(R.rows)]
    if all(v < 0 for v in values):
        return -1
    if all(v > 0 for v in values):
        return 1
    return 0


def build_periods(spec: CurveSpec, basis: IntersectionData, precision_bits: Optional[int] = None,
                  workers: int = config.MAX_WORKERS, orient: bool = True) -> PeriodData:
    """
    A, σ, τ and D from the canonical basis

    With orient set, a positive definite Re τ flips every B_i so that Re τ is
    negative definite; an indefinite Re τ raises NotNegativeDefinite.
    """
    if spec.genus < 1:
        raise GenusZero(f"(N={spec.N}, m={spec.m}) has genus 0")
    bits = precision_bits or spec.precision_bits
    g = spec.genus
    with mp.workprec(bits):
        moments, loop_err = all_loop_moments(spec, basis.cycles, workers)
        layout = MomentLayout.for_curve(spec)
        pd = PeriodData(spec, basis, layout, moments, None, None, None, None, None, mp.mpf(0))
        holo = holomorphic_basis(spec)
        A = to_matrix([[pd.form_period(w, row) for w in holo] for row in basis.a_rows])
        B = to_matrix([[pd.form_period(w, row) for w in holo] for row in basis.b_rows])
        sigma = 2j * mp.pi * _invert(A.T, bits)
        tau = B * sigma.T
        flipped = False
        if orient:
            sign = definiteness(tau)
            if sign > 0:
                basis = basis.flipped()
                B = -B
                tau = -tau
                flipped = True
            elif sign == 0:
                raise NotNegativeDefinite("Re τ is indefinite; the cycle basis is not canonical")
        beta_cols = [layout.holo_slot(spec.N - 1, b) for b in range(1, spec.L + 1)]
        D = mp.matrix(spec.L, g)
        for r, c in enumerate(beta_cols):
            for j in range(g):
                D[r, j] = sigma[j, c]
        weight = max(int(np.abs(basis.transform).sum(axis=1).max()), 1)
        scale = mp.mnorm(sigma, 1)
        err = loop_err * weight * max(scale, mp.mpf(1))
        return PeriodData(spec, basis, layout, moments, A, B, sigma, tau, D, err, flipped)


def normalization_defect(periods: PeriodData):
    """max |∫_{A_i} v_j - 2πi δ_ij|"""
    with mp.workprec(periods.spec.precision_bits):
        M = periods.A_matrix * periods.sigma.T - 2j * mp.pi * mp.eye(periods.genus)
        return max(abs(M[i, j]) for i in range(M.rows) for j in range(M.cols))


def symmetry_defect(periods: PeriodData):
    """‖τ - τᵀ‖ / ‖τ‖"""
    with mp.workprec(periods.spec.precision_bits):
        tau = periods.tau
        return mp.mnorm(tau - tau.T, 1) / mp.mnorm(tau, 1)


def bilinear_defect(spec: CurveSpec, intersection: IntersectionData, periods: PeriodData):
    """
    Riemann bilinear identity Σ_i A_i(w)B_i(w') - B_i(w)A_i(w') for all pairs
    of holomorphic basis forms, relative to max |A|·max |B|
    """
    with mp.workprec(spec.precision_bits):
        A, B = periods.A_matrix, periods.B_matrix
        g = spec.genus
        scale = max(abs(A[i, j]) for i in range(g) for j in range(g)) * \
            max(abs(B[i, j]) for i in range(g) for j in range(g))
        worst = mp.mpf(0)
        for c in range(g):
            for d in range(c + 1, g):
                total = sum((A[i, c] * B[i, d] - B[i, c] * A[i, d] for i in range(g)), mp.mpc(0))
                worst = max(worst, abs(total))
        return worst / scale


def v_at_branch_check(spec: CurveSpec, periods: PeriodData, p: int):
    """
    max_j |v_j(Q_p) - N c_p^{1-N} Σ_β σ_{j(N-1,β)} λ_p^{β-1}|, relative to the largest expected value
    """
    if not 1 <= p <= spec.degree:
        raise InvalidIndex(f"branch index {p} outside 1..{spec.degree}")
    with mp.workprec(spec.precision_bits):
        cp = branch_root(spec, p)
        lp = spec.lam(p)
        worst = mp.mpf(0)
        biggest = mp.mpf(0)
        for j in range(spec.genus):
            local = local_value_at_branch(spec, p, NormalizedForm(periods, j))
            expected = spec.N * cp ** (1 - spec.N) * sum(
                (periods.D[b - 1, j] * lp ** (b - 1) for b in range(1, spec.L + 1)), mp.mpc(0))
            worst = max(worst, abs(local - expected))
            biggest = max(biggest, abs(expected))
        return worst / max(biggest, mp.mpf(2) ** (-spec.precision_bits))


def exact_period_defect(periods: PeriodData, p: int = 1):
    """max over A and B cycles of |∫ N d(s^{N-1}/(z - λ_p))|"""
    with mp.workprec(periods.spec.precision_bits):
        form = ExactPart(p)
        rows = list(periods.intersection.a_rows) + list(periods.intersection.b_rows)
        return max(abs(periods.form_period(form, row)) for row in rows)
