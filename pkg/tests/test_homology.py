import numpy as np
import pytest

from znkz.errors import RankDeficient
from znkz.homology import (build_intersection_data, deck_action, elementary_cycles, export_cycles,
                           intersection_matrix, standard_form, symplectic_reduction)


def _J(g):
    return np.block([[np.zeros((g, g), dtype=np.int64), np.eye(g, dtype=np.int64)],
                     [-np.eye(g, dtype=np.int64), np.zeros((g, g), dtype=np.int64)]])


def test_reduction_of_standard_form():
    T, pairs, rank = symplectic_reduction(_J(1))
    assert rank == 2
    assert pairs == [(0, 1)]
    assert np.array_equal(T @ _J(1) @ T.T, _J(1))


def test_reduction_leaves_null_rows():
    K = np.array([[0, 1, 0], [-1, 0, 1], [0, -1, 0]])
    T, pairs, rank = symplectic_reduction(K)
    assert rank == 2
    assert round(abs(np.linalg.det(T))) == 1
    reduced = T @ K @ T.T
    assert reduced[0, 1] == 1
    assert not np.any(reduced[2])


def test_non_unimodular_pairing_is_rejected():
    with pytest.raises(RankDeficient):
        symplectic_reduction(np.array([[0, 2], [-2, 0]]))


def test_elementary_pairing_n2m2(curve_n2m2):
    cycles = elementary_cycles(curve_n2m2)
    assert len(cycles) == 3
    K = intersection_matrix(curve_n2m2, cycles)
    assert np.array_equal(K, -K.T)
    assert abs(K[0, 1]) == 1
    assert np.linalg.matrix_rank(K) == 2


def test_canonical_basis_n2m2(curve_n2m2):
    data = build_intersection_data(curve_n2m2)
    assert data.genus == 1
    assert np.array_equal(standard_form(data), _J(1))
    assert len(data.null_rows) == 1


def test_canonical_basis_n2m3(curve_n2m3):
    data = build_intersection_data(curve_n2m3)
    assert np.array_equal(standard_form(data), _J(2))
    assert round(abs(np.linalg.det(data.transform))) == 1


def test_deck_action_has_order_n(curve_n3m1):
    data = build_intersection_data(curve_n3m1)
    phi = deck_action(curve_n3m1, data)
    assert np.array_equal(np.linalg.matrix_power(phi, 3), np.eye(2 * data.genus, dtype=np.int64))


def test_export_cycles(curve_n2m2):
    exported = export_cycles(curve_n2m2, elementary_cycles(curve_n2m2))
    assert len(exported) == 3
    assert {"code", "polyline"} <= set(exported[0])
    assert len(exported[0]["polyline"][0]) == 2
