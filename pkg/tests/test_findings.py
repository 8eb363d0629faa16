import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from qra.correlation import kendall_tau_b
from qra.errors import DomainError
from qra.findings import (PairwiseSignTable, averaged_p, p_from_tables, p_measure, pooled_p,
                          sign_table)

UP = {"A": 1, "B": 2, "C": 3}
DOWN = {"A": 3, "B": 2, "C": 1}


def test_sign_table_examples():
    assert dict(sign_table(UP).signs) == {("A", "B"): -1, ("A", "C"): -1, ("B", "C"): -1}
    assert dict(sign_table({"A": 2, "B": 2}).signs) == {("A", "B"): 0}
    assert dict(sign_table({"A": 5, "B": 1, "C": 3}).signs) == {
        ("A", "B"): 1, ("A", "C"): 1, ("B", "C"): -1}


def test_sign_table_invariants():
    t = sign_table({"A": 5, "B": 1, "C": 3, "D": 0})
    assert len(t.signs) == 6
    for a in "ABCD":
        for b in "ABCD":
            if a != b:
                assert t.sign(b, a) == -t.sign(a, b)
    with pytest.raises(DomainError):
        sign_table({"A": 1})
    with pytest.raises(DomainError, match="incomplete system coverage"):
        sign_table({"A": 1, "B": 2}, systems=["A", "B", "C"])


def test_from_triples_normalizes_orientation():
    t = PairwiseSignTable.from_triples("e", [("B", "A", 1), ("A", "C", -1), ("C", "B", 0)])
    assert t.systems == ("B", "A", "C")
    assert t.sign("A", "B") == -1 and t.sign("B", "C") == 0
    with pytest.raises(DomainError, match="no finding"):
        PairwiseSignTable.from_triples("e", [("A", "B", 1)], systems=["A", "B", "C"])


def test_p_examples():
    assert p_measure([UP, dict(UP)]) == (1.0, 3, 3)
    assert p_measure([UP, DOWN]) == (0.0, 0, 3)
    res = p_measure([UP, dict(UP), DOWN])
    assert res.p == pytest.approx(1 / 3)
    assert (res.matches, res.comparisons) == (3, 9)


def test_p_errors():
    with pytest.raises(DomainError):
        p_measure([UP])
    with pytest.raises(DomainError, match="incomplete system coverage"):
        p_measure([UP, {"A": 1, "B": 2}])
    with pytest.raises(DomainError, match="incomplete system coverage"):
        p_measure([UP, {**UP, "D": 4}])


@pytest.mark.parametrize("per_qc,expected", [
    ([(0, 3), (2, 3)], 1 / 3),
    ([(3, 3)], 1.0),
    ([(1, 2), (1, 2)], 0.5),
])
def test_pooled_p(per_qc, expected):
    assert pooled_p(per_qc) == pytest.approx(expected, abs=1e-12)


def test_pooling_differs_from_averaging():
    assert pooled_p([(1, 1), (0, 3)]) == 0.25
    assert averaged_p([(1, 1), (0, 3)]) == 0.5
    with pytest.raises(DomainError):
        pooled_p([(0, 0)])
    with pytest.raises(DomainError):
        pooled_p([])


def test_tie_semantics():
    both_tie = [{"A": 1, "B": 1}, {"A": 2, "B": 2}]
    one_tie = [{"A": 1, "B": 1}, {"A": 1, "B": 2}]
    assert p_measure(both_tie).p == 1.0
    assert p_measure(one_tie).p == 0.0
    with pytest.raises(DomainError, match="no comparable"):
        p_measure(one_tie, exclude_ties=True)
    res = p_measure([{"A": 1, "B": 1, "C": 3}, {"A": 1, "B": 2, "C": 3}], exclude_ties=True)
    assert (res.matches, res.comparisons) == (2, 2)


def test_oracle_equivalence_random():
    rng = np.random.default_rng(9)
    for _ in range(1000):
        n, m = int(rng.integers(2, 6)), int(rng.integers(2, 6))
        systems = [f"S{j}" for j in range(m)]
        exps = [dict(zip(systems, rng.integers(0, 4, m).tolist())) for _ in range(n)]
        assert abs(p_measure(exps).p - oracles.p_measure(exps)) <= 1e-9


scores = st.integers(-5, 5)


@given(st.integers(2, 4), st.integers(2, 5), st.data())
def test_p_invariances(n, m, data):
    systems = [f"S{j}" for j in range(m)]
    exps = [dict(zip(systems, data.draw(st.lists(scores, min_size=m, max_size=m))))
            for _ in range(n)]
    base = p_measure(exps).p
    assert 0 <= base <= 1
    order = data.draw(st.permutations(range(n)))
    assert p_measure([exps[i] for i in order]).p == pytest.approx(base)
    rename = dict(zip(systems, data.draw(st.permutations(systems))))
    assert p_measure([{rename[s]: v for s, v in e.items()} for e in exps]).p == pytest.approx(base)
    k = data.draw(st.integers(0, n - 1))
    transformed = list(exps)
    transformed[k] = {s: np.exp(v) * 3 + 1 for s, v in exps[k].items()}
    assert p_measure(transformed).p == pytest.approx(base)


@given(st.permutations(range(5)), st.permutations(range(5)))
def test_p_and_tau_coherent_for_two_tie_free_experiments(x, y):
    systems = list("ABCDE")
    p = p_measure([dict(zip(systems, x)), dict(zip(systems, y))]).p
    tau = kendall_tau_b(x, y)
    assert (p == 1) == (tau == pytest.approx(1))
    assert (p == 0) == (tau == pytest.approx(-1))
