import numpy as np
import pytest
from mpmath import mp
from sympy import Rational

from znkz import config as znkz_config
from znkz.curve import BranchPoint, SheetPoint
from znkz.errors import InvalidIndex, NoCandidate, NotNegativeDefinite, Underflow, WrongN
from znkz.kz import enumerate_partitions, solve_integral
from znkz.theta import (CharacteristicSolver, Characteristics, a_period_identity_defect, abel_map, lattice_coordinates,
                        lattice_points, modulus_ratio_spread, ratio_spread, riemann_theta, smirnov_sl2,
                        theta_solution, thomae_check)


def test_genus_one_theta_matches_jacobi():
    with mp.workprec(128):
        tau = mp.matrix([[-5]])
        value = riemann_theta([mp.mpc(0)], tau, Characteristics.zero(1)).value
        assert abs(value - mp.jtheta(3, 0, mp.exp(mp.mpf(-5) / 2))) < mp.mpf(10) ** -30
        assert abs(value - mp.mpf("1.1642607974")) < mp.mpf(10) ** -9


def test_integer_shift_of_delta_is_invisible():
    with mp.workprec(128):
        tau = mp.matrix([[mp.mpc(-3, "0.4")]])
        z = [mp.mpc("0.2", "0.1")]
        chars = Characteristics((Rational(1, 2),), (Rational(0),))
        a = riemann_theta(z, tau, chars).value
        b = riemann_theta(z, tau, chars.shifted([1], [0])).value
        assert abs(a - b) < mp.mpf(10) ** -30


def test_parity_under_negation():
    with mp.workprec(128):
        tau = mp.matrix([[mp.mpf(-4), mp.mpf("0.5")], [mp.mpf("0.5"), mp.mpf(-3)]])
        z = [mp.mpc("0.3", "0.1"), mp.mpc("-0.2", "0.4")]
        chars = Characteristics((Rational(1, 3), Rational(1, 6)), (Rational(1, 4), Rational(1, 2)))
        minus = Characteristics(tuple(-d for d in chars.delta), tuple(-e for e in chars.epsilon))
        a = riemann_theta([-v for v in z], tau, chars).value
        b = riemann_theta(z, tau, minus).value
        assert abs(a - b) < mp.mpf(10) ** -30


def test_gradient_matches_finite_difference():
    with mp.workprec(128):
        tau = mp.matrix([[mp.mpc(-2, 1)]])
        chars = Characteristics((Rational(1, 4),), (Rational(1, 3),))
        z = mp.mpc("0.1", "0.2")
        h = mp.mpf(10) ** -12
        ev = riemann_theta([z], tau, chars)
        fd = (riemann_theta([z + h], tau, chars, deriv=0).value -
              riemann_theta([z - h], tau, chars, deriv=0).value) / (2 * h)
        assert abs(ev.gradient[0] - fd) < mp.mpf(10) ** -15


def test_integer_shift_of_epsilon_is_a_phase():
    with mp.workprec(128):
        tau = mp.matrix([[mp.mpc(-3, "0.4")]])
        z = [mp.mpc("0.2", "0.1")]
        chars = Characteristics((Rational(1, 3),), (Rational(1, 4),))
        a = riemann_theta(z, tau, chars).value
        b = riemann_theta(z, tau, chars.shifted([0], [1])).value
        assert abs(b - mp.exp(2j * mp.pi / 3) * a) < mp.mpf(10) ** -30


def test_odd_characteristic_vanishes_at_zero():
    with mp.workprec(128):
        tau = mp.matrix([[-3]])
        half = Characteristics((Rational(1, 2),), (Rational(1, 2),))
        ev = riemann_theta([mp.mpc(0)], tau, half, deriv=0)
        assert abs(ev.value) < mp.mpf(10) ** -30
        assert ev.vanishes
        with pytest.raises(Underflow):
            ev.log_gradient()
        full = riemann_theta([mp.mpc(0)], tau, half)
        assert abs(full.gradient[0]) > mp.mpf(10) ** -3
        with pytest.raises(Underflow):
            full.log_derivatives


def test_multi_index_derivatives():
    with mp.workprec(128):
        tau = mp.matrix([[mp.mpf(-4), mp.mpf("0.5")], [mp.mpf("0.5"), mp.mpf(-3)]])
        z = [mp.mpc("0.3", "0.1"), mp.mpc("-0.2", "0.4")]
        chars = Characteristics((Rational(1, 3), Rational(0)), (Rational(1, 4), Rational(1, 2)))
        full = riemann_theta(z, tau, chars)
        first = riemann_theta(z, tau, chars, deriv=(1,))
        assert first.derivative((1,)) == full.derivative((1,))
        assert full.derivative((0, 1)) == full.hessian[0][1]
        assert full.derivative(()) == full.value
        with pytest.raises(InvalidIndex):
            riemann_theta(z, tau, chars, deriv=(0, 1, 1))
        with pytest.raises(InvalidIndex):
            full.derivative((0, 0, 0))


def test_truncation_tail_is_below_precision():
    with mp.workprec(128):
        tau = mp.matrix([[mp.mpc("-0.2", 1), 0], [0, mp.mpc(-5, 0)]])
        ev = riemann_theta([mp.mpc("0.1"), mp.mpc(0, 1)], tau, Characteristics.zero(2))
        assert ev.tail_bound < mp.mpf(2) ** -120 * ev.magnitude
        assert ev.terms > 1


def test_positive_real_part_is_rejected():
    with pytest.raises(NotNegativeDefinite):
        riemann_theta([mp.mpc(0)], mp.matrix([[1]]), Characteristics.zero(1))


def test_lattice_points_in_small_balls():
    one = lattice_points(np.eye(1), np.zeros(1), np.zeros(1), 4.0)
    assert sorted(one) == [(-2,), (-1,), (0,), (1,), (2,)]
    two = lattice_points(np.eye(2), np.zeros(2), np.zeros(2), 1.0)
    assert set(two) == {(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)}


def test_reduced_characteristics():
    chars = Characteristics((Rational(-1, 3),), (Rational(5, 4),)).reduced()
    assert chars == Characteristics((Rational(2, 3),), (Rational(1, 4),))


def test_smirnov_needs_hyperelliptic_curve(curve_n3m1, context_n3m1):
    with pytest.raises(WrongN):
        smirnov_sl2(curve_n3m1, context_n3m1.periods)


def test_candidate_cap(context_n3m1, monkeypatch):
    monkeypatch.setattr(znkz_config, "MAX_CHARACTERISTIC_CANDIDATES", 35)
    solver = CharacteristicSolver(context_n3m1.spec, context_n3m1.periods)
    with pytest.raises(NoCandidate, match="36"):
        solver.resolve()


@pytest.mark.slow
@pytest.mark.parametrize("name", ["context_n2m2", "context_n3m1"])
def test_a_period_identity(name, request):
    context = request.getfixturevalue(name)
    solver = CharacteristicSolver(context.spec, context.periods)
    for part in enumerate_partitions(context.spec.N, context.spec.m):
        result = a_period_identity_defect(context.spec, context.periods, part, solver)
        assert result["defect"] < mp.mpf(10) ** -15
        assert result["kappa"] in ("+2πi", "-2πi")


@pytest.mark.slow
@pytest.mark.parametrize("name", ["context_n2m2", "context_n3m1"])
def test_theta_solution_is_proportional_to_integral_solution(name, request):
    context = request.getfixturevalue(name)
    spec = context.spec
    solver = CharacteristicSolver(spec, context.periods)
    with mp.workprec(spec.precision_bits):
        sol = solve_integral(spec, context.periods, workers=2)
        thetas = {p.canonical(): theta_solution(spec, context.periods, p.canonical(), solver=solver)
                  for p in enumerate_partitions(spec.N, spec.m)}
        assert ratio_spread(thetas, sol.entries) < mp.mpf(10) ** -12


@pytest.mark.slow
@pytest.mark.parametrize("name", ["context_n2m2", "context_n3m1"])
def test_thomae_quotient_is_constant(name, request):
    context = request.getfixturevalue(name)
    spec = context.spec
    solver = CharacteristicSolver(spec, context.periods)
    step = spec.min_distance / 100
    samples = [list(spec.lambdas[:-1]) + [spec.lambdas[-1] + step * mp.mpc(1, k)] for k in (-1, 1)]
    for part in enumerate_partitions(spec.N, spec.m)[:2]:
        assert thomae_check(spec, context, part.canonical(), samples, solver) < mp.mpf(10) ** -12


@pytest.mark.slow
def test_hyperelliptic_formula_matches_up_to_modulus(context_n2m2):
    spec = context_n2m2.spec
    with mp.workprec(spec.precision_bits):
        values = smirnov_sl2(spec, context_n2m2.periods)
        sol = solve_integral(spec, context_n2m2.periods, workers=2)
        assert modulus_ratio_spread(values, sol.entries) < mp.mpf(10) ** -12


def test_abel_map_base_point_and_range(context_n3m1):
    spec = context_n3m1.spec
    with mp.workprec(spec.precision_bits):
        base = SheetPoint(spec.base_point, 0, mp.mpc(1))
        assert abel_map(spec, context_n3m1.periods, base) == [mp.mpc(0)] * spec.genus
        with pytest.raises(InvalidIndex):
            abel_map(spec, context_n3m1.periods, BranchPoint(4))


def test_abel_images_of_branch_points_are_n_torsion(context_n3m1):
    spec = context_n3m1.spec
    periods = context_n3m1.periods
    with mp.workprec(spec.precision_bits):
        for p in (2, 3):
            a = abel_map(spec, periods, BranchPoint(p))
            b = abel_map(spec, periods, BranchPoint(1))
            diff = [spec.N * (x - y) for x, y in zip(a, b)]
            delta, eps = lattice_coordinates(periods, diff)
            assert all(abs(v - mp.nint(v)) < mp.mpf(10) ** -20 for v in delta + eps)
