import pytest
from mpmath import mp

from znkz.algebra import OrderedPartition
from znkz.curve import (branch_root, continue_s, declared_path, local_value_at_branch, monodromy, sheet_point,
                        validate_curve)
from znkz.differentials import Holo, Mu
from znkz.errors import BadCount, DuplicateBranchPoint, InvalidIndex, PathTooClose, PoleAtBranchPoint


@pytest.mark.parametrize("N,m,lams,genus,L", [
    (2, 2, ["0", "1", "2", "3"], 1, 1),
    (2, 1, ["0", "1"], 0, 0),
    (3, 2, ["0", "1", "2", "3", "4", "5"], 4, 3),
])
def test_genus_and_L(N, m, lams, genus, L):
    spec = validate_curve(N, m, lams)
    assert spec.genus == genus
    assert spec.L == L


def test_rejects_bad_input():
    with pytest.raises(BadCount):
        validate_curve(2, 2, ["0", "1", "2"])
    with pytest.raises(DuplicateBranchPoint):
        validate_curve(2, 2, ["0", "1", "1", "3"])
    with pytest.raises(InvalidIndex):
        validate_curve(1, 2, ["0", "1"])
    with pytest.raises(InvalidIndex):
        validate_curve(2, 1, ["0", "1"], precision_bits=32)


def test_complex_pairs_are_parsed(curve_n3m1):
    assert curve_n3m1.lam(3) == mp.mpc(2, 1)


def test_sheet_point_lies_on_curve(curve_n3m1):
    with mp.workprec(curve_n3m1.precision_bits):
        for sheet in range(3):
            x = sheet_point(curve_n3m1, mp.mpc("0.5", "2"), sheet)
            assert abs(x.s ** 3 - curve_n3m1.f(x.z)) < mp.mpf(10) ** -30
            assert x.sheet == sheet


def test_declared_path_starts_at_base_point(curve_n2m2):
    path = declared_path(curve_n2m2, mp.mpc("1.5", "0.5"))
    assert path[0] == curve_n2m2.base_point
    assert path[-1] == mp.mpc("1.5", "0.5")


@pytest.mark.parametrize("p", [1, 2, 3])
def test_single_branch_point_monodromy_is_a_shift(curve_n3m1, p):
    assert monodromy(curve_n3m1, p) == [1, 2, 0]


def test_branch_root_is_an_nth_root(curve_n3m1):
    with mp.workprec(curve_n3m1.precision_bits):
        for p in (1, 2, 3):
            c = branch_root(curve_n3m1, p)
            assert abs(c ** 3 - curve_n3m1.fprime(p)) < mp.mpf(10) ** -30


def test_holomorphic_local_value(curve_n2m2):
    with mp.workprec(curve_n2m2.precision_bits):
        value = local_value_at_branch(curve_n2m2, 1, Holo(1, 1))
        expected = 2 / branch_root(curve_n2m2, 1)
        assert abs(value - expected) < mp.mpf(10) ** -20 * abs(expected)


def test_pole_at_branch_point_is_detected(curve_n2m2):
    part = OrderedPartition.from_blocks([[1, 2], [3, 4]])
    with pytest.raises(PoleAtBranchPoint):
        local_value_at_branch(curve_n2m2, 1, Mu(part, 1))


def _square(centre, half):
    c = mp.mpc(centre)
    corners = [(1, 0), (1, 1), (-1, 1), (-1, -1), (1, -1), (1, 0)]
    return [c + half * mp.mpc(a, b) for a, b in corners]


def test_loop_around_one_branch_point_changes_sheet(curve_n2m2):
    with mp.workprec(curve_n2m2.precision_bits):
        path = _square(0, mp.mpf("0.5"))
        end = continue_s(curve_n2m2, path, sheet_point(curve_n2m2, path[0], 0))
        assert end.sheet == 1


def test_homotopic_paths_reach_the_same_value(curve_n2m2):
    with mp.workprec(curve_n2m2.precision_bits):
        start = sheet_point(curve_n2m2, mp.mpc("1.5", 2), 0)
        straight = [mp.mpc("1.5", 2), mp.mpc("1.5", -2)]
        bent = [mp.mpc("1.5", 2), mp.mpc("1.2", 1), mp.mpc("1.8", "-0.5"), mp.mpc("1.5", -2)]
        around_one = [mp.mpc("1.5", 2), mp.mpc("0.5", 1), mp.mpc("0.5", -1), mp.mpc("1.5", -2)]
        a = continue_s(curve_n2m2, straight, start)
        b = continue_s(curve_n2m2, bent, start)
        c = continue_s(curve_n2m2, around_one, start)
        assert a.sheet == b.sheet
        assert abs(a.s - b.s) < mp.mpf(10) ** -30
        assert abs(a.s + c.s) < mp.mpf(10) ** -30


def test_loop_around_no_branch_point_is_trivial(curve_n2m2):
    with mp.workprec(curve_n2m2.precision_bits):
        path = _square(mp.mpc("1.5", 2), mp.mpf("0.25"))
        start = sheet_point(curve_n2m2, path[0], 1)
        end = continue_s(curve_n2m2, path, start)
        assert end.sheet == 1
        assert abs(end.s - start.s) < mp.mpf(10) ** -30


def test_path_through_a_branch_point_is_rejected(curve_n2m2):
    with mp.workprec(curve_n2m2.precision_bits):
        start = sheet_point(curve_n2m2, mp.mpc("-0.5", 0), 0)
        with pytest.raises(PathTooClose):
            continue_s(curve_n2m2, [mp.mpc("-0.5", 0), mp.mpc("0.5", 0)], start)
