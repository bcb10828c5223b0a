import pytest
from sympy import QQ, Rational

from znkz.algebra import (OrderedPartition, block_pair, discriminant, exact_part_coefficient, f_derivative,
                          lagrange_weight, mu_coefficient, mu_representative, pair_exponent, partition_denominator,
                          poly_eval, poly_from_roots, product, spin_exponent, spin_labels, thomae_gamma,
                          thomae_mu, vandermonde, zeta_polynomial)
from znkz.errors import BadIndices, InvalidIndex


def test_empty_product_is_one():
    assert product([]) == 1


def test_poly_from_roots_evaluates_to_product():
    coeffs = poly_from_roots([QQ(1), QQ(2), QQ(-3)])
    x = QQ(5, 7)
    assert poly_eval(coeffs, x) == (x - 1) * (x - 2) * (x + 3)


def test_partition_validation():
    with pytest.raises(InvalidIndex):
        OrderedPartition.from_blocks([[1, 2], [2, 3]])
    with pytest.raises(InvalidIndex):
        OrderedPartition.from_blocks([[1, 2], [3]])


def test_partition_blocks_are_periodic():
    part = OrderedPartition.from_blocks([[1, 2], [3, 4], [5, 6]])
    assert part.block(0) == part.block(3) == (5, 6)
    assert part.block_of(4) == 2
    assert part.k() == (1, 1, 2, 2, 3, 3)
    assert part.element(2, 2) == 4


def test_partition_minus_and_swap():
    part = OrderedPartition.from_blocks([[1], [2], [3]])
    assert part.minus().blocks == ((2,), (1,), (3,))
    assert part.swap(1, 3).blocks == ((3,), (2,), (1,))
    assert part.cyclic_shift().blocks == ((3,), (1,), (2,))


def test_permute_fixes_last_block():
    part = OrderedPartition.from_blocks([[1], [2], [3]])
    assert part.permute((2, 1)).blocks == ((2,), (1,), (3,))
    with pytest.raises(InvalidIndex):
        part.permute((1, 3))


def test_vandermonde_and_lagrange_reject_repeats():
    lams = [QQ(1), QQ(2), QQ(3)]
    with pytest.raises(BadIndices):
        vandermonde(lams, [1, 1])
    with pytest.raises(BadIndices):
        lagrange_weight(QQ(0), 0, [QQ(1), QQ(1)])


def test_lagrange_weights_sum_to_one():
    nodes = [QQ(1), QQ(3, 2), QQ(-2)]
    x = QQ(7, 3)
    assert sum(lagrange_weight(x, k, nodes) for k in range(3)) == 1


def test_partition_denominator_for_singletons_is_discriminant():
    lams = [QQ(2), QQ(-1), QQ(5, 3)]
    part = OrderedPartition.from_blocks([[1], [2], [3]])
    assert partition_denominator(lams, part) == discriminant(lams)
    assert block_pair(lams, (1,), (2,)) == 3


def test_exact_part_matches_derivative_of_s_power():
    # N d(s^{N-1}/(z-λ_p)) / (dz/s) = ((N-1) f' (z-λ_p) - N f) / (z-λ_p)²
    lams = [QQ(0), QQ(1), QQ(2), QQ(3)]
    z = QQ(9, 4)
    f = product(z - l for l in lams)
    expected = (f_derivative(lams, z) * (z - 1) - 2 * f) / (z - 1) ** 2
    assert exact_part_coefficient(lams, 2, 2, z) == expected


def test_mu_and_zeta_shapes():
    lams = [QQ(0), QQ(1), QQ(2), QQ(3)]
    part = OrderedPartition.from_blocks([[1, 2], [3, 4]])
    z = QQ(11, 5)
    # μ_1 = (λ_1-λ_3)(λ_1-λ_4)(z-λ_2)/(z-λ_1)
    assert mu_coefficient(lams, part, 1, z) == 6 * (z - 1) / z
    assert len(mu_representative(lams, part, 1)) >= 1
    with pytest.raises(InvalidIndex):
        zeta_polynomial(lams, part, 2)


def test_spin_labels_and_exponents():
    assert spin_labels(3) == [-1, 0, 1]
    assert spin_exponent(Rational(1, 2), 0, 2) == Rational(1, 4)
    assert spin_exponent(Rational(-1, 2), 0, 2) == Rational(-1, 4)


@pytest.mark.parametrize("N", [2, 3, 4, 5, 6])
def test_negative_pair_sum(N):
    total = sum(pair_exponent(i, j, N) for i in range(N) for j in range(i + 1, N))
    assert total == -Rational(N * N - 1, 24)


@pytest.mark.parametrize("N", [2, 3, 4])
def test_diagonal_pair_exponent_is_gamma(N):
    assert all(pair_exponent(i, i, N) == thomae_gamma(N) for i in range(N))


def test_thomae_constants_for_n2():
    assert thomae_mu(2) == Rational(1, 4)
    assert thomae_gamma(2) == Rational(1, 8)
