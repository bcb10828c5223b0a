import pytest
from sympy import QQ

from znkz.algebra import OrderedPartition
from znkz.errors import BadIndices, DegenerateSampling
from znkz.verify import (REGISTRY, FormExpr, FunctionTerm, IdentityCase, Point, build_identity, lambda_derivative,
                         mutate, registry_cases, run_cases, standard_partition, test_identity as check_identity,
                         verify_appendix_suite)

TRIALS = 5


def _passes(case):
    return check_identity(build_identity(case), case.trials, case.seed).passed


def test_standard_partition():
    assert standard_partition(3, 2) == OrderedPartition(((1, 2), (3, 4), (5, 6)))


def test_lambda_derivative_of_a_product():
    pt = Point((QQ(1, 2), QQ(3), QQ(-2, 5)), QQ(7, 3))
    value = lambda_derivative(lambda lams, z: lams[0] * lams[1] ** 2 * (z - lams[2]), pt, 2)
    assert value == 2 * QQ(1, 2) * QQ(3) * (QQ(7, 3) + QQ(2, 5))


@pytest.mark.parametrize("id", ["rel1", "rel2", "rel3", "rel4", "rel5"])
def test_mu_relations_n3m2(id):
    cases = [c for c in registry_cases(3, 2, [id], TRIALS) if not c.informational]
    assert cases
    for case in cases:
        assert _passes(case), case.to_json()


def test_rel4_with_shifted_coefficient_fails():
    case = IdentityCase("rel4", 3, 2, {"r": 1, "l": 1, "b_shift": 1}, trials=TRIALS)
    assert not _passes(case)


def test_shifted_rel4_reading_is_informational():
    cases = registry_cases(3, 2, ["rel4"], TRIALS)
    assert any(c.informational for c in cases)
    assert all(c.params["reading"] == "shifted" for c in cases if c.informational)


def test_rel2_rejects_last_block():
    with pytest.raises(BadIndices):
        build_identity(IdentityCase("rel2", 3, 2, {"r": 3, "l": 2, "l2": 1}))


def test_unknown_identity():
    with pytest.raises(BadIndices):
        build_identity(IdentityCase("rel9", 3, 2))
    with pytest.raises(BadIndices):
        registry_cases(3, 2, ["rel9"])


def test_partition_shape_must_match():
    with pytest.raises(BadIndices):
        build_identity(IdentityCase("rel1", 3, 2, {"r": 1, "l": 1}, standard_partition(2, 2)))


@pytest.mark.parametrize("N", [2, 3, 4, 5, 6])
def test_spin_exponent_sums(N):
    for id in ("qsum_neg", "qsum_pos", "q_symmetry", "qsum_perm"):
        assert _passes(IdentityCase(id, N, 1, trials=1)), id


@pytest.mark.parametrize("id", ["rel1", "rel5", "f21", "f41", "prop5", "prop2_szego"])
def test_mutated_identity_is_caught(id):
    case = registry_cases(3, 2, [id], TRIALS)[0]
    verdict = check_identity(mutate(build_identity(case)), TRIALS, case.seed)
    assert not verdict.passed
    assert verdict.trials <= TRIALS
    assert verdict.to_json()["witness"] is not None


@pytest.mark.parametrize("N,m", [(2, 2), (3, 1), (3, 2)])
def test_ds_rule_and_spin_products(N, m):
    results = run_cases(registry_cases(N, m, ["ds_rule", "lemma1_prod1", "lemma1_prod2", "prod_exponents",
                                              "prop2_szego"], TRIALS), workers=2)
    assert all(r["pass"] for r in results)


@pytest.mark.parametrize("N,m", [(2, 3), (3, 3)])
def test_residue_sums(N, m):
    results = run_cases(registry_cases(N, m, ["resth", "resth1", "resth2a", "resth2b"], TRIALS), workers=2)
    assert all(r["pass"] for r in results if not r.get("informational"))


@pytest.mark.parametrize("N,m", [(2, 2), (3, 2), (4, 1)])
def test_derivation_suite(N, m):
    report = verify_appendix_suite(N, m, trials=TRIALS, workers=2)
    assert report["pass"]
    assert {r["id"] for r in report["results"]} <= set(REGISTRY)


def test_derivation_suite_grid_is_bounded():
    with pytest.raises(BadIndices):
        verify_appendix_suite(5, 1)


def test_degenerate_sampling():
    expr = FormExpr(2, 2).add(lambda pt: 1, FunctionTerm(lambda pt: QQ(1) / (pt.z - pt.z), 0, "pole"))
    with pytest.raises(DegenerateSampling):
        check_identity(expr, trials=2)


def test_sampling_is_reproducible():
    case = registry_cases(3, 2, ["rel1"], TRIALS)[0]
    expr = mutate(build_identity(case))
    first = check_identity(expr, TRIALS, 7)
    second = check_identity(expr, TRIALS, 7)
    assert first.witness == second.witness
