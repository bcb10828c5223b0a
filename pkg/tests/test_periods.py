import pytest
from mpmath import mp

from znkz.curve import validate_curve
from znkz.differentials import ExactPart, Holo
from znkz.errors import GenusZero, InvalidIndex
from znkz.homology import build_intersection_data
from znkz.kz import SolverContext, solve_integral
from znkz.periods import (bilinear_defect, build_periods, definiteness, exact_period_defect,
                          normalization_defect, symmetry_defect, v_at_branch_check)

TIGHT = mp.mpf(10) ** -20


def test_genus_zero_is_rejected():
    spec = validate_curve(2, 1, ["0", "1"])
    with pytest.raises(GenusZero):
        build_periods(spec, None)


def test_a_normalization(context_n2m2):
    with mp.workprec(128):
        assert normalization_defect(context_n2m2.periods) < TIGHT


def test_tau_is_symmetric_with_negative_definite_real_part(context_n3m1):
    with mp.workprec(128):
        periods = context_n3m1.periods
        assert symmetry_defect(periods) < TIGHT
        assert definiteness(periods.tau) < 0


def test_bilinear_identity(curve_n2m3):
    with mp.workprec(curve_n2m3.precision_bits):
        data = build_intersection_data(curve_n2m3)
        periods = build_periods(curve_n2m3, data, workers=2)
        assert bilinear_defect(curve_n2m3, periods.intersection, periods) < TIGHT


def test_exact_form_has_zero_periods(context_n2m2):
    with mp.workprec(128):
        assert exact_period_defect(context_n2m2.periods, p=2) < TIGHT


def test_a_period_lookup(context_n2m2):
    with mp.workprec(128):
        periods = context_n2m2.periods
        assert periods.period(Holo(1, 1), "A", 1) == periods.A_matrix[0, 0]
        with pytest.raises(InvalidIndex):
            periods.cycle_rows("C")


def test_d_matrix_shape(context_n3m1):
    periods = context_n3m1.periods
    assert (periods.D.rows, periods.D.cols) == (context_n3m1.spec.L, context_n3m1.spec.genus)


def test_normalized_differentials_at_branch_point(curve_n2m2, context_n2m2):
    with mp.workprec(128):
        assert v_at_branch_check(curve_n2m2, context_n2m2.periods, 1) < TIGHT


@pytest.mark.parametrize("p", [1, 2, 3])
def test_normalized_differentials_at_every_branch_point_n3(curve_n3m1, context_n3m1, p):
    with mp.workprec(128):
        assert v_at_branch_check(curve_n3m1, context_n3m1.periods, p) < TIGHT


def test_exact_part_integrates_to_zero_on_a_cycle(context_n3m1):
    with mp.workprec(128):
        periods = context_n3m1.periods
        assert abs(periods.period(ExactPart(1), "B", 1)) < TIGHT


def test_elliptic_period_matches_agm(context_n2m2):
    # s² = z(z-1)(z-2)(z-3): 2∫_0^1 dz/|s| = π/agm(1, √3/2) on the imaginary axis, 2∫_1^2 = π/agm(1, 1/2) on the real
    with mp.workprec(128):
        periods = context_n2m2.periods
        imag_period = mp.pi / mp.agm(1, mp.sqrt(3) / 2)
        real_period = mp.pi / mp.agm(1, mp.mpf(1) / 2)
        for value in (periods.A_matrix[0, 0], periods.B_matrix[0, 0]):
            for coordinate in (value.imag / imag_period, value.real / real_period):
                assert abs(coordinate - mp.nint(coordinate)) < TIGHT
        covolume = abs((mp.conj(periods.A_matrix[0, 0]) * periods.B_matrix[0, 0]).imag)
        assert abs(covolume - imag_period * real_period) < TIGHT


@pytest.mark.slow
def test_doubling_precision_stays_within_error_estimate(curve_n2m2, context_n2m2):
    fine_spec = validate_curve(2, 2, ["0", "1", "2", "3"], 256)
    with mp.workprec(256):
        fine = SolverContext.build(fine_spec, workers=2)
        coarse = context_n2m2.periods
        err = coarse.err
        g = coarse.genus
        for i in range(g):
            for j in range(g):
                assert abs(fine.periods.tau[i, j] - coarse.tau[i, j]) < err
        coarse_sol = solve_integral(curve_n2m2, coarse, workers=2)
        fine_sol = solve_integral(fine_spec, fine.periods, workers=2)
        for key, value in coarse_sol.entries.items():
            assert abs(fine_sol.entries[key] - value) < err * abs(value)
