"""Reproducibility of findings: P, the share of system pairs ranked the same way.

For every unordered pair of experiments and every unordered pair of systems
the signs of the score differences are compared. Summing over unordered pairs
gives the same proportion as the ordered-pair definition, because flipping
either pair's orientation flips both signs and leaves equality unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Mapping, NamedTuple, Sequence

from .errors import DomainError


def _sign(d: float) -> int:
    return int(d > 0) - int(d < 0)


@dataclass(frozen=True)
class PairwiseSignTable:
    """Signs of M(a) - M(b) for each system pair (a, b), a before b in ``systems``."""

    experiment: str
    systems: tuple[str, ...]
    signs: Mapping[tuple[str, str], int]

    def sign(self, a: str, b: str) -> int:
        if (a, b) in self.signs:
            return self.signs[(a, b)]
        return -self.signs[(b, a)]

    @classmethod
    def from_triples(cls, experiment: str, triples, systems: Sequence[str] | None = None):
        """Build from published findings given as (a, b, sign) triples."""
        raw = {(a, b): int(s) for a, b, s in triples}
        order = tuple(systems or dict.fromkeys(x for pair in raw for x in pair))
        signs = {}
        for a, b in combinations(order, 2):
            if (a, b) in raw:
                signs[(a, b)] = raw[(a, b)]
            elif (b, a) in raw:
                signs[(a, b)] = -raw[(b, a)]
            else:
                raise DomainError(f"{experiment}: no finding for systems {a!r} and {b!r}")
        return cls(experiment, order, signs)


def sign_table(scores: Mapping[str, float], systems: Sequence[str] | None = None,
               experiment: str = "") -> PairwiseSignTable:
    order = tuple(systems) if systems is not None else tuple(scores)
    if len(order) < 2:
        raise DomainError("need at least 2 systems")
    missing = [s for s in order if s not in scores]
    if missing:
        raise DomainError(f"incomplete system coverage: {', '.join(missing)}")
    signs = {(a, b): _sign(scores[a] - scores[b]) for a, b in combinations(order, 2)}
    return PairwiseSignTable(experiment, order, signs)


class PResult(NamedTuple):
    p: float
    matches: int
    comparisons: int


def p_from_tables(tables: Sequence[PairwiseSignTable], exclude_ties: bool = False) -> PResult:
    if len(tables) < 2:
        raise DomainError("need at least 2 experiments")
    systems = tables[0].systems
    if any(set(t.systems) != set(systems) for t in tables):
        raise DomainError("incomplete system coverage: experiments cover different systems")
    pairs = list(combinations(systems, 2))
    matches = comparisons = 0
    for t1, t2 in combinations(tables, 2):
        for a, b in pairs:
            s1, s2 = t1.sign(a, b), t2.sign(a, b)
            if exclude_ties and (s1 == 0 or s2 == 0):
                continue
            comparisons += 1
            matches += s1 == s2
    if comparisons == 0:
        raise DomainError("no comparable system pairs")
    return PResult(matches / comparisons, matches, comparisons)


def p_measure(experiments: Sequence[Mapping[str, float]], systems: Sequence[str] | None = None,
              exclude_ties: bool = False) -> PResult:
    """P over per-experiment score mappings that share one system set.

    With ``exclude_ties`` a system pair tied in either experiment of a
    comparison is dropped instead of counted.
    """
    if len(experiments) < 2:
        raise DomainError("need at least 2 experiments")
    order = tuple(systems) if systems is not None else tuple(experiments[0])
    for e in experiments:
        if set(e) - set(order):
            raise DomainError("incomplete system coverage: undeclared systems scored")
    tables = [sign_table(e, order, experiment=str(i)) for i, e in enumerate(experiments)]
    return p_from_tables(tables, exclude_ties=exclude_ties)


def pooled_p(per_qc: Sequence[tuple[int, int]]) -> float:
    """Study-level P over all differences: total matches over total comparisons."""
    total = sum(c for _, c in per_qc)
    if not per_qc or total <= 0:
        raise DomainError("no comparisons to pool")
    return sum(m for m, _ in per_qc) / total


def averaged_p(per_qc: Sequence[tuple[int, int]]) -> float:
    """Alternative study-level P: unweighted mean of the per-criterion proportions."""
    if not per_qc or any(c <= 0 for _, c in per_qc):
        raise DomainError("no comparisons to average")
    return sum(m / c for m, c in per_qc) / len(per_qc)
