import math
from itertools import permutations

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

import oracles
from qra.correlation import (AlignedScoreMatrix, kendall_tau_b, kendall_w, midranks,
                             pairwise_mean, pearson_r, spearman_rho)
from qra.errors import DomainError


def matrix(*rows):
    return AlignedScoreMatrix.from_rows(rows)


def test_pearson_examples():
    assert pearson_r([1, 2, 3], [1, 2, 3]) == pytest.approx(1.0)
    assert pearson_r([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)
    assert pearson_r([1, 2, 3], [1, 2, 4]) == pytest.approx(9 / math.sqrt(84), abs=1e-12)
    assert pearson_r([1, 2, 3], [1, 2, 4]) == pytest.approx(0.981981, abs=1e-6)


def test_spearman_examples():
    assert spearman_rho([10, 20, 30], [1, 2, 3]) == pytest.approx(1.0)
    assert spearman_rho([1, 1, 2], [1, 2, 3]) == pytest.approx(math.sqrt(3) / 2, abs=1e-12)
    assert spearman_rho([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)


def test_tau_b_examples():
    assert kendall_tau_b([1, 1, 2], [1, 2, 3]) == pytest.approx(2 / math.sqrt(6), abs=1e-12)
    assert kendall_tau_b([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)
    assert kendall_tau_b([1, 2, 3], [1, 2, 3]) == pytest.approx(1.0)


@pytest.mark.parametrize("fn", [pearson_r, spearman_rho, kendall_tau_b])
def test_undefined_on_constant_vector(fn):
    with pytest.raises(DomainError, match="undefined"):
        fn([2, 2, 2], [1, 2, 3])


@pytest.mark.parametrize("fn", [pearson_r, spearman_rho, kendall_tau_b])
def test_length_checks(fn):
    with pytest.raises(DomainError):
        fn([1, 2], [1, 2, 3])
    with pytest.raises(DomainError):
        fn([1], [1])


def test_midranks():
    assert midranks([10, 30, 20, 30]).tolist() == [1, 3.5, 2, 3.5]


def test_kendall_w_examples():
    assert kendall_w(matrix([1, 2, 3], [1, 2, 3], [1, 2, 3])) == pytest.approx(1.0)
    assert kendall_w(matrix([1, 2, 3], [3, 2, 1])) == pytest.approx(0.0)
    # rank sums 4, 5, 9 -> S = 14; 12 * 14 / (9 * 24)
    assert kendall_w(matrix([1, 2, 3], [1, 2, 3], [2, 1, 3])) == pytest.approx(7 / 9, abs=1e-12)


def test_kendall_w_all_tied_is_undefined():
    with pytest.raises(DomainError):
        kendall_w(matrix([1, 1, 1], [2, 2, 2]))


def test_matrix_validation():
    with pytest.raises(DomainError, match="missing"):
        matrix([1, 2, float("nan")], [1, 2, 3])
    with pytest.raises(DomainError):
        matrix([1, 2, 3])
    with pytest.raises(DomainError):
        AlignedScoreMatrix(("a", "b"), ("e1", "e2"), np.zeros((2, 3)))


def test_pairwise_mean_examples():
    same = matrix([1, 2, 3], [1, 2, 3], [1, 2, 3])
    assert pairwise_mean(same, "pearson").value == pytest.approx(1.0)
    assert pairwise_mean(same, "spearman").value == pytest.approx(1.0)
    two = matrix([1, 2, 3], [1, 2, 4])
    assert pairwise_mean(two, "pearson").value == pearson_r([1, 2, 3], [1, 2, 4])
    mixed = matrix([1, 2, 3], [1, 2, 3], [3, 2, 1])
    assert pairwise_mean(mixed, "spearman").value == pytest.approx(-1 / 3, abs=1e-12)


def test_pairwise_mean_excludes_undefined_pairs():
    m = AlignedScoreMatrix.from_rows([[1, 2, 3], [5, 5, 5], [1, 2, 4]], experiments=["a", "b", "c"])
    res = pairwise_mean(m, "pearson")
    assert res.pairs_used == 1
    assert res.excluded == (("a", "b"), ("b", "c"))
    assert res.value == pytest.approx(pearson_r([1, 2, 3], [1, 2, 4]))
    with pytest.raises(DomainError):
        pairwise_mean(matrix([1, 1, 1], [2, 2, 2]), "pearson")


def _random_instances(count, seed, tie_prone=False):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        n = int(rng.integers(2, 6))
        m = int(rng.integers(2, 7))
        if tie_prone:
            rows = rng.integers(1, 4, size=(n, m)).astype(float)
        else:
            rows = rng.normal(size=(n, m))
        yield rows


def test_oracle_equivalence_random():
    checked = 0
    for k, rows in enumerate(_random_instances(1000, 11, tie_prone=False)):
        x, y = rows[0], rows[1]
        assert abs(pearson_r(x, y) - oracles.pearson(list(x), list(y))) <= 1e-9
        assert abs(spearman_rho(x, y) - oracles.spearman(list(x), list(y))) <= 1e-9
        assert abs(kendall_tau_b(x, y) - oracles.tau_b(list(x), list(y))) <= 1e-9
        assert abs(kendall_w(AlignedScoreMatrix.from_rows(rows))
                   - oracles.kendall_w([list(r) for r in rows])) <= 1e-9
        checked += 1
    assert checked == 1000


def test_oracle_equivalence_with_ties():
    for rows in _random_instances(1000, 12, tie_prone=True):
        x, y = list(rows[0]), list(rows[1])
        if len(set(x)) > 1 and len(set(y)) > 1:
            assert abs(spearman_rho(x, y) - oracles.spearman(x, y)) <= 1e-9
            assert abs(kendall_tau_b(x, y) - oracles.tau_b(x, y)) <= 1e-9
            # scipy as a second, external reference
            assert kendall_tau_b(x, y) == pytest.approx(stats.kendalltau(x, y)[0], abs=1e-9)
        if any(len(set(r)) > 1 for r in rows):
            assert abs(kendall_w(AlignedScoreMatrix.from_rows(rows))
                       - oracles.kendall_w([list(r) for r in rows])) <= 1e-9


finite = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False)


@given(st.integers(2, 5), st.integers(2, 6), st.data())
def test_bounds_and_permutation_equivariance(n, m, data):
    rows = np.array(data.draw(st.lists(st.lists(finite, min_size=m, max_size=m),
                                       min_size=n, max_size=n)))
    perm = data.draw(st.permutations(range(m)))
    mat = AlignedScoreMatrix.from_rows(rows)
    permuted = AlignedScoreMatrix.from_rows(rows[:, perm])
    try:
        w = kendall_w(mat)
    except DomainError:
        return
    assert 0 <= w <= 1
    assert kendall_w(permuted) == pytest.approx(w, abs=1e-12)
    for fn in (pearson_r, spearman_rho, kendall_tau_b):
        try:
            v = fn(rows[0], rows[1])
        except DomainError:
            continue
        assert -1 <= v <= 1
        assert fn(rows[0][perm], rows[1][perm]) == pytest.approx(v, abs=1e-9)


@given(st.lists(st.permutations(range(5)), min_size=2, max_size=4))
def test_w_is_one_iff_identical_tie_free_rankings(perms):
    w = kendall_w(AlignedScoreMatrix.from_rows(perms))
    identical = all(p == perms[0] for p in perms)
    assert (w == pytest.approx(1.0, abs=1e-12)) == identical


def test_rho_tau_sign_agree_for_three_tie_free_systems():
    # exhaustive over every pair of rankings of three systems
    for x in permutations(range(3)):
        for y in permutations(range(3)):
            rho, tau = spearman_rho(x, y), kendall_tau_b(x, y)
            assert math.copysign(1, rho) == math.copysign(1, tau)


def test_rho_tau_signs_can_differ_with_more_systems():
    x = [0.5, 2.0, -1.0, 1.0, 0.0, 3.0]
    y = [2.0, -2.0, -1.0, 3.0, 1.0, 0.0]
    assert spearman_rho(x, y) == pytest.approx(-3 / 35, abs=1e-12)
    assert kendall_tau_b(x, y) == pytest.approx(1 / 15, abs=1e-12)


def test_identical_tied_rankings_give_w_one():
    # the tie-corrected denominator also reaches 1 for identical rankings with ties
    assert kendall_w(matrix([1, 1, 2], [1, 1, 2])) == pytest.approx(1.0)
