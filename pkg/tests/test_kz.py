import pytest
from mpmath import mp
from sympy import Rational

from znkz.algebra import OrderedPartition
from znkz.curve import validate_curve
from znkz.errors import DegenerateVandermonde, GenusTooSmall, InvalidIndex, StepTooLarge
from znkz.kz import (SolverContext, cycle_covariance_check, dim_counts, enumerate_partitions, kz_residual,
                     parse_cycle_ref, partition_count, principal_power, pset_spread, singlet_residual,
                     solution_rank, solve_integral)


@pytest.mark.parametrize("N,m,count", [(2, 2, 6), (3, 1, 6), (2, 1, 2), (3, 2, 90)])
def test_partition_enumeration(N, m, count):
    parts = enumerate_partitions(N, m)
    assert len(parts) == count == partition_count(N, m)
    assert len(set(parts)) == count


def test_dim_counts_examples():
    assert dim_counts(3, 2) == {"mult": 5, "I": 4, "ratio": Rational(5, 4)}
    counts = dim_counts(2, 2)
    assert (counts["mult"], counts["I"], counts["ratio"]) == (2, 2, 1)


@pytest.mark.parametrize("N", [2, 3, 4, 5])
def test_single_block_counts(N):
    counts = dim_counts(N, 1)
    assert counts["mult"] == counts["I"] == 1


@pytest.mark.parametrize("N,m", [(3, 2), (3, 3), (4, 2), (4, 3)])
def test_ratio_exceeds_one(N, m):
    assert dim_counts(N, m)["ratio"] > 1


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_corrected_count_matches_multiplicity(m):
    counts = dim_counts(2, m)
    assert counts["corrected_I"] == counts["mult"]


def test_cycle_references():
    assert parse_cycle_ref("B2") == ("B", 2)
    with pytest.raises(InvalidIndex):
        parse_cycle_ref("C1")


def test_principal_power():
    with mp.workprec(128):
        assert abs(principal_power(mp.mpc(-4), Rational(1, 2)) - mp.mpc(0, 2)) < mp.mpf(10) ** -30


def test_solve_argument_checks(curve_n2m2, context_n2m2):
    with pytest.raises(GenusTooSmall):
        solve_integral(curve_n2m2, context_n2m2.periods, ["A1", "B1"])
    with pytest.raises(InvalidIndex):
        solve_integral(curve_n2m2, context_n2m2.periods, p_set=[5])


def test_repeated_pset_is_degenerate():
    spec = validate_curve(3, 2, ["0", "1", "2", "3", "4", "5"])
    with pytest.raises(DegenerateVandermonde):
        solve_integral(spec, None, ["A1", "A2", "A3"], [1, 1, 2])


def test_both_determinant_formulas_agree(context_n2m2):
    with mp.workprec(128):
        sol = solve_integral(context_n2m2.spec, context_n2m2.periods, workers=2)
        assert len(sol.entries) == 6
        assert sol.disagreement < mp.mpf(10) ** -25


def test_solution_depends_on_block_sets_only(context_n2m2):
    with mp.workprec(128):
        sol = solve_integral(context_n2m2.spec, context_n2m2.periods, workers=2)
        part = OrderedPartition.from_blocks([[2, 1], [4, 3]])
        assert sol.value(part) == sol.value(part.canonical())


def test_singlet_property(context_n2m2, context_n3m1):
    with mp.workprec(128):
        for context in (context_n2m2, context_n3m1):
            sol = solve_integral(context.spec, context.periods, workers=2)
            assert singlet_residual(context.spec, sol) < mp.mpf(10) ** -20


def test_cycle_change_scales_by_determinant(context_n3m1):
    with mp.workprec(128):
        cov = cycle_covariance_check(context_n3m1.spec, context_n3m1.periods)
        assert cov["spread"] < mp.mpf(10) ** -20
        assert abs(cov["ratio"] - cov["expected"]) < mp.mpf(10) ** -20


def test_solution_rank_of_repeated_vector(context_n2m2):
    with mp.workprec(128):
        sol = solve_integral(context_n2m2.spec, context_n2m2.periods, workers=2)
        assert solution_rank([sol, sol])["rank"] == 1
        assert solution_rank([])["rank"] == 0


def test_step_above_clearance(curve_n2m2, context_n2m2):
    with pytest.raises(StepTooLarge):
        kz_residual(curve_n2m2, context_n2m2, 1, h=1)


@pytest.mark.slow
@pytest.mark.parametrize("p", [1, 2, 3, 4])
def test_kz_equation_n2m2(curve_n2m2, context_n2m2, p):
    assert kz_residual(curve_n2m2, context_n2m2, p) < 1e-6


@pytest.mark.slow
@pytest.mark.parametrize("p", [1, 2, 3])
def test_kz_equation_n3m1(curve_n3m1, context_n3m1, p):
    assert kz_residual(curve_n3m1, context_n3m1, p) < 1e-6


@pytest.mark.slow
def test_pset_independence_n3m2():
    spec = validate_curve(3, 2, ["0", "1", ["2", "1"], "3", ["1", "-1"], ["4", "0.5"]], 128)
    context = SolverContext.build(spec, workers=4)
    spread = pset_spread(spec, context.periods, [[1, 2, 3], [2, 4, 6], [1, 5, 6]])
    assert spread < mp.mpf(10) ** -20
