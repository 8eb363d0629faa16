"""Chance-corrected agreement between label sets, one experiment acting as one rater.

Units are aligned across experiments by (system, item_id, span) with exact
span equality.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from itertools import permutations
from typing import Hashable, Iterable, Sequence

from .errors import DomainError

UnitKey = tuple  # (system, item_id, span)

REFERENCE_ONLY = ("study-level agreement is a mean over quality criteria and only "
                  "gives points of reference; label sets usually differ between criteria")


@dataclass(frozen=True)
class LabelGrid:
    units: tuple[UnitKey, ...]
    raters: tuple[str, ...]
    labels: tuple[tuple[Hashable | None, ...], ...]  # one row per unit, None = absent
    label_set: tuple[Hashable, ...]

    def __post_init__(self):
        if len(self.labels) != len(self.units):
            raise DomainError("one label row per unit required")
        if any(len(row) != len(self.raters) for row in self.labels):
            raise DomainError("every label row needs one cell per rater")
        if len(self.raters) < 2:
            raise DomainError("need at least 2 raters")
        allowed = set(self.label_set)
        for key, row in zip(self.units, self.labels):
            for lab in row:
                if lab is not None and lab not in allowed:
                    raise DomainError(f"label {lab!r} at unit {key} not in label set")

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence], label_set=None, raters=None, units=None):
        """Build a grid from one label column per rater (None for absent cells)."""
        n_units = len(columns[0])
        rows = tuple(tuple(col[i] for col in columns) for i in range(n_units))
        if label_set is None:
            label_set = sorted({x for col in columns for x in col if x is not None}, key=repr)
        return cls(
            units=tuple(units or ((None, str(i), None) for i in range(n_units))),
            raters=tuple(raters or (f"E{k}" for k in range(len(columns)))),
            labels=rows,
            label_set=tuple(label_set),
        )

    def restrict(self, keep: Iterable[int]) -> "LabelGrid":
        idx = list(keep)
        return LabelGrid(
            units=tuple(self.units[i] for i in idx),
            raters=self.raters,
            labels=tuple(self.labels[i] for i in idx),
            label_set=self.label_set,
        )

    def for_system(self, system: str) -> "LabelGrid":
        return self.restrict(i for i, u in enumerate(self.units) if u[0] == system)

    @property
    def complete(self) -> bool:
        return all(lab is not None for row in self.labels for lab in row)


def cohen_kappa(grid: LabelGrid) -> float:
    if len(grid.raters) != 2:
        raise DomainError("Cohen's kappa is defined for exactly 2 raters")
    if not grid.complete:
        raise DomainError("Cohen's κ requires complete alignment")
    if not grid.labels:
        raise DomainError("no units to compare")
    n = len(grid.labels)
    p_o = sum(a == b for a, b in grid.labels) / n
    first = Counter(a for a, _ in grid.labels)
    second = Counter(b for _, b in grid.labels)
    p_e = sum(first[c] * second[c] for c in first) / (n * n)
    if p_e == 1:
        raise DomainError("degenerate marginals: both raters use a single identical label")
    return (p_o - p_e) / (1 - p_e)


def fleiss_kappa(grid: LabelGrid) -> float:
    rows = [[lab for lab in row if lab is not None] for row in grid.labels]
    rows = [r for r in rows if r]
    if not rows:
        raise DomainError("no labelled units")
    k = len(rows[0])
    if k < 2 or any(len(r) != k for r in rows):
        raise DomainError("Fleiss's kappa needs the same number (>= 2) of labels on every "
                          "unit; use kripp_alpha for incomplete data")
    n = len(rows)
    totals: Counter = Counter()
    p_units = []
    for r in rows:
        counts = Counter(r)
        totals.update(counts)
        p_units.append(sum(c * (c - 1) for c in counts.values()) / (k * (k - 1)))
    p_bar = sum(p_units) / n
    p_e = sum((c / (n * k)) ** 2 for c in totals.values())
    if p_e == 1:
        raise DomainError("degenerate marginals: a single label used throughout")
    return (p_bar - p_e) / (1 - p_e)


def coincidences(grid: LabelGrid) -> dict[tuple, float]:
    """Coincidence matrix o[c, k] over pairable values (units with >= 2 labels)."""
    o: dict[tuple, float] = defaultdict(float)
    for row in grid.labels:
        values = [lab for lab in row if lab is not None]
        m = len(values)
        if m < 2:
            continue
        for a, b in permutations(values, 2):
            o[(a, b)] += 1.0 / (m - 1)
    return dict(o)


def kripp_alpha(grid: LabelGrid, metric: str = "nominal") -> float:
    if metric != "nominal":
        raise ValueError("only the nominal metric is supported")
    o = coincidences(grid)
    n_c: dict = defaultdict(float)
    for (a, _), w in o.items():
        n_c[a] += w
    n = sum(n_c.values())
    if n < 2:
        raise DomainError("fewer than 2 pairable values")
    observed = sum(w for (a, b), w in o.items() if a != b)
    expected = (n * n - sum(v * v for v in n_c.values())) / (n - 1)
    if expected == 0:
        raise DomainError("agreement undefined: all pairable values carry the same label")
    return 1 - observed / expected


def aggregate_type3(per_qc: Sequence[tuple[str, float]]) -> tuple[float, str]:
    """Mean of quality-criterion-level agreement values and the caveat that must travel with it."""
    if not per_qc:
        raise DomainError("no quality-criterion values to aggregate")
    return sum(v for _, v in per_qc) / len(per_qc), REFERENCE_ONLY
