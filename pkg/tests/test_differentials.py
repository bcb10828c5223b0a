import pytest
from mpmath import mp
from sympy import Rational

from znkz.algebra import OrderedPartition
from znkz.curve import SheetPoint, sheet_point
from znkz.differentials import (Holo, Mu, SpinF, Zeta, eval_form, eval_spin_product_identities,
                                exact_relation_defect, holomorphic_basis, parse_form, szego_factorization_defect,
                                szego_algebraic, szego_at_branch)
from znkz.errors import CoincidentProjection, InvalidIndex, PoleHit

PART_22 = OrderedPartition.from_blocks([[1, 2], [3, 4]])
PART_31 = OrderedPartition.from_blocks([[1], [2], [3]])


def test_holomorphic_basis_has_genus_forms(curve_n2m3, curve_n3m1):
    assert holomorphic_basis(curve_n2m3) == [Holo(1, 1), Holo(1, 2)]
    assert len(holomorphic_basis(curve_n3m1)) == curve_n3m1.genus


def test_parse_form(curve_n2m2):
    assert parse_form(curve_n2m2, "holo:a=1,b=1") == Holo(1, 1)
    assert parse_form(curve_n2m2, "mu:p=4", PART_22) == Mu(PART_22, 4)
    with pytest.raises(InvalidIndex):
        parse_form(curve_n2m2, "zeta:j=2", PART_22)
    with pytest.raises(InvalidIndex):
        parse_form(curve_n2m2, "mu:p=1")
    with pytest.raises(InvalidIndex):
        parse_form(curve_n2m2, "bogus:p=1", PART_22)


def test_zeta_index_range(curve_n2m2):
    with pytest.raises(InvalidIndex):
        Zeta(PART_22, 0).validate(curve_n2m2)


def test_spin_label_must_match_parity(curve_n2m2):
    with pytest.raises(InvalidIndex):
        SpinF(Rational(0), PART_22).validate(curve_n2m2)


def test_eval_form_near_branch_point(curve_n2m2):
    x = SheetPoint(mp.mpc("1e-8", 0), 0, mp.mpc(1))
    with pytest.raises(PoleHit):
        eval_form(curve_n2m2, Mu(PART_22, 1), x)


def test_exact_relation_at_sample_point(curve_n2m2):
    with mp.workprec(curve_n2m2.precision_bits):
        defect = exact_relation_defect(curve_n2m2, PART_22, 4, mp.mpc(10, 1), sheet=0)
        assert abs(defect) < mp.mpf(10) ** -30


@pytest.mark.parametrize("p", [1, 2, 3])
def test_spin_product_identities(curve_n3m1, p):
    with mp.workprec(curve_n3m1.precision_bits):
        x = sheet_point(curve_n3m1, mp.mpc("0.3", "1.7"), 1)
        at_branch, pointwise = eval_spin_product_identities(curve_n3m1, PART_31, p, x)
        assert at_branch < mp.mpf(10) ** -20
        assert pointwise < mp.mpf(10) ** -30


def test_szego_kernel_needs_distinct_projections(curve_n2m2):
    x = sheet_point(curve_n2m2, mp.mpc("0.5", "1"), 0)
    with pytest.raises(CoincidentProjection):
        szego_algebraic(curve_n2m2, PART_22, x, x)


def test_branch_kernel_is_a_limit_of_the_algebraic_kernel(curve_n3m1):
    with mp.workprec(curve_n3m1.precision_bits):
        x = sheet_point(curve_n3m1, mp.mpc("0.4", "1.2"), 0)
        at_q = szego_at_branch(curve_n3m1, PART_31, x, 2)
        assert mp.isfinite(abs(at_q))


@pytest.mark.parametrize("p", [1, 2, 3, 4])
def test_szego_factorization(curve_n2m2, p):
    with mp.workprec(curve_n2m2.precision_bits):
        x = sheet_point(curve_n2m2, mp.mpc("1.3", "0.8"), 1)
        assert szego_factorization_defect(curve_n2m2, PART_22, p, x) < mp.mpf(10) ** -20
