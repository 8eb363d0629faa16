"""Rank and product-moment correlation between aligned per-system score vectors.

Ties use mid-ranks for Spearman and the tau-b correction for Kendall. With
more than two experiments, Pearson and Spearman are averaged over all
experiment pairs and Kendall's W (tie-corrected) measures overall
concordance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class AlignedScoreMatrix:
    """Rows are experiments, columns systems. Every cell must be present."""

    systems: tuple[str, ...]
    experiments: tuple[str, ...]
    scores: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.scores, dtype=float)
        if arr.shape != (len(self.experiments), len(self.systems)):
            raise DomainError(
                f"score matrix shape {arr.shape} does not match "
                f"{len(self.experiments)} experiments x {len(self.systems)} systems")
        if len(self.systems) < 2 or len(self.experiments) < 2:
            raise DomainError("need at least 2 systems and 2 experiments")
        if not np.all(np.isfinite(arr)):
            raise DomainError("score matrix has missing or non-finite cells")
        arr.setflags(write=False)
        object.__setattr__(self, "scores", arr)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[float]], systems=None, experiments=None):
        rows = [list(r) for r in rows]
        systems = tuple(systems or (f"S{j}" for j in range(len(rows[0]))))
        experiments = tuple(experiments or (f"E{i}" for i in range(len(rows))))
        return cls(systems, experiments, np.array(rows, dtype=float))


def _pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DomainError("score vectors must be one-dimensional and of equal length")
    if len(x) < 2:
        raise DomainError("need at least 2 paired scores")
    return x, y


def midranks(values) -> np.ndarray:
    """1-based ranks, tied values sharing the average of the positions they span."""
    v = np.asarray(values, dtype=float)
    order = np.argsort(v, kind="mergesort")
    ranks = np.empty(len(v))
    i = 0
    while i < len(v):
        j = i
        while j + 1 < len(v) and v[order[j + 1]] == v[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def pearson_r(x, y) -> float:
    x, y = _pair(x, y)
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise DomainError("correlation undefined: zero variance")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def spearman_rho(x, y) -> float:
    x, y = _pair(x, y)
    try:
        return pearson_r(midranks(x), midranks(y))
    except DomainError:
        raise DomainError("correlation undefined: all values tied") from None


def kendall_tau_b(x, y) -> float:
    x, y = _pair(x, y)
    n = len(x)
    concordant = discordant = ties_x = ties_y = 0
    for i, j in combinations(range(n), 2):
        sx = np.sign(x[i] - x[j])
        sy = np.sign(y[i] - y[j])
        if sx == 0:
            ties_x += 1
        if sy == 0:
            ties_y += 1
        if sx * sy > 0:
            concordant += 1
        elif sx * sy < 0:
            discordant += 1
    n0 = n * (n - 1) // 2
    denom = (n0 - ties_x) * (n0 - ties_y)
    if denom == 0:
        raise DomainError("correlation undefined: all pairs tied")
    return (concordant - discordant) / math.sqrt(denom)


def kendall_w(matrix: AlignedScoreMatrix) -> float:
    """Kendall's coefficient of concordance with the tie-corrected denominator."""
    ranks = np.array([midranks(row) for row in matrix.scores])
    n, m = ranks.shape
    if m < 2:
        raise DomainError("need at least 2 systems")
    totals = ranks.sum(axis=0)
    s = float(((totals - totals.mean()) ** 2).sum())
    tie_term = 0.0
    for row in matrix.scores:
        _, counts = np.unique(row, return_counts=True)
        tie_term += float((counts ** 3 - counts).sum())
    denom = n * n * (m ** 3 - m) - n * tie_term
    if denom == 0:
        raise DomainError("concordance undefined: every experiment ties all systems")
    return min(1.0, max(0.0, 12 * s / denom))


class PairwiseMean(NamedTuple):
    value: float
    pairs_used: int
    excluded: tuple[tuple[str, str], ...]


_PAIRWISE = {"pearson": pearson_r, "spearman": spearman_rho}


def pairwise_mean(matrix: AlignedScoreMatrix, which: str) -> PairwiseMean:
    """Mean of a pairwise statistic over all unordered experiment pairs.

    Pairs whose statistic is undefined are left out and reported in ``excluded``.
    """
    fn = _PAIRWISE[which]
    values = []
    excluded = []
    for i, j in combinations(range(len(matrix.experiments)), 2):
        try:
            values.append(fn(matrix.scores[i], matrix.scores[j]))
        except DomainError:
            excluded.append((matrix.experiments[i], matrix.experiments[j]))
    if not values:
        raise DomainError(f"{which} correlation undefined for every experiment pair")
    return PairwiseMean(math.fsum(values) / len(values), len(values), tuple(excluded))
