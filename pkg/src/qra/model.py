"""Domain types for reproducibility assessment and structural validation of studies.

A measurement maps (measurand, object, time, conditions) to a measured
quantity value. Here the measurand is an evaluation measure or quality
criterion, the object is a system and the conditions are the experiment's
property sheet.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

from . import properties as props

SCORES = "scores"
LABELS = "labels"
FINDINGS = "findings"
RESULT_KINDS = (SCORES, LABELS, FINDINGS)


@dataclass(frozen=True)
class QuantityValue:
    value: float
    scale_min: float = 0.0
    scale_max: float | None = None  # None = unbounded


@dataclass(frozen=True)
class Measurement:
    measurand: str
    object: str
    conditions: str
    value: QuantityValue
    time: str | None = None


@dataclass(frozen=True)
class PropertySheet:
    general: Mapping[str, Any] = field(default_factory=dict)
    human_eval: Mapping[str, Any] | None = None
    extensions: Mapping[str, Any] = field(default_factory=dict)

    @property
    def is_human(self) -> bool:
        return self.human_eval is not None

    def flat(self) -> dict[str, Any]:
        """All properties in one namespace; extension keys never shadow schema keys."""
        out = dict(self.extensions)
        out.update(self.general)
        if self.human_eval:
            out.update(self.human_eval)
        return out


@dataclass(frozen=True)
class Label:
    item_id: str
    label: str
    span: tuple[int, int] | None = None


@dataclass(frozen=True)
class AnnotationSet:
    system: str
    items: tuple[Label, ...]


@dataclass(frozen=True)
class Scale:
    min: float = 0.0
    max: float | None = None
    declared: bool = True


@dataclass(frozen=True)
class Experiment:
    """One evaluation of a set of systems on a single quality criterion.

    ``kind`` selects which payload is populated: ``measurements`` for
    scores, ``annotations`` (with ``label_set``) for labels, ``signs`` for
    findings published without scores.
    """

    id: str
    quality_criterion: str
    kind: str
    properties: PropertySheet = field(default_factory=PropertySheet)
    measurements: tuple[Measurement, ...] = ()
    annotations: tuple[AnnotationSet, ...] = ()
    label_set: tuple[str, ...] = ()
    signs: tuple[tuple[str, str, int], ...] = ()
    scale: Scale = field(default_factory=lambda: Scale(declared=False))

    def scores(self) -> dict[str, float]:
        return {m.object: m.value.value for m in self.measurements}

    @property
    def systems(self) -> tuple[str, ...]:
        if self.kind == SCORES:
            return tuple(m.object for m in self.measurements)
        if self.kind == LABELS:
            return tuple(a.system for a in self.annotations)
        seen = dict.fromkeys(s for pair in self.signs for s in pair[:2])
        return tuple(seen)


@dataclass(frozen=True)
class StudyBundle:
    study_id: str
    systems: tuple[str, ...]
    experiments: tuple[Experiment, ...]

    def quality_criteria(self) -> list[str]:
        return list(dict.fromkeys(e.quality_criterion for e in self.experiments))

    def for_qc(self, qc: str, kind: str | None = None) -> list[Experiment]:
        return [e for e in self.experiments
                if e.quality_criterion == qc and (kind is None or e.kind == kind)]


@dataclass(frozen=True)
class PrecisionStats:
    n: int
    mean: float
    s: float
    s_star: float
    cv_star: float
    ci_low: float
    ci_high: float
    confidence_level: float
    caveats: tuple[str, ...] = ()


MEASURES = (
    "cv_star", "pearson_r", "spearman_rho", "kendall_tau_b", "kendall_w",
    "cohen_kappa", "fleiss_kappa", "kripp_alpha", "p_measure",
)
LEVELS = ("system", "qc", "study")

RESULT_TYPE = {
    "cv_star": "I",
    "pearson_r": "II", "spearman_rho": "II", "kendall_tau_b": "II", "kendall_w": "II",
    "cohen_kappa": "III", "fleiss_kappa": "III", "kripp_alpha": "III",
    "p_measure": "IV",
}

# Which levels each result type can be assessed at; True marks the native level.
LEVEL_AVAILABILITY = {
    "I": {"system": True, "qc": False, "study": False},
    "II": {"qc": True},
    "III": {"system": False, "qc": True, "study": False},
    "IV": {"qc": False, "study": True},
}

PERMITTED: dict[tuple[str, str], bool] = {
    (m, lvl): native
    for m, rt in RESULT_TYPE.items()
    for lvl, native in LEVEL_AVAILABILITY[rt].items()
}


def is_native(measure: str, level: str) -> bool:
    return PERMITTED.get((measure, level), False)


@dataclass(frozen=True)
class MeasureResult:
    measure: str
    level: str
    value: float | None
    qc: str | None = None
    system: str | None = None
    n: int | None = None
    scope: tuple[str, ...] = ()
    caveats: tuple[str, ...] = ()
    extras: Mapping[str, float] = field(default_factory=dict)
    digest: str = ""

    def __post_init__(self):
        if (self.measure, self.level) not in PERMITTED:
            raise ValueError(f"{self.measure} is not defined at {self.level} level")

    @property
    def native(self) -> bool:
        return PERMITTED[(self.measure, self.level)]

    @property
    def result_type(self) -> str:
        return RESULT_TYPE[self.measure]


# --- validation -----------------------------------------------------------

@dataclass(frozen=True, order=True)
class Finding:
    path: str
    message: str

    def __str__(self):
        return f"{self.path}: {self.message}"


def _check_sheet(path: str, sheet: PropertySheet) -> Iterable[Finding]:
    blocks = [("general", sheet.general, props.GENERAL_KEYS)]
    if sheet.human_eval is not None:
        blocks.append(("human_eval", sheet.human_eval, props.HUMAN_EVAL_KEYS))
    for name, block, allowed in blocks:
        for key, value in block.items():
            if key not in allowed:
                yield Finding(f"{path}.{name}.{key}", "unknown property key")
                continue
            problem = props.check_value(key, value)
            if problem:
                yield Finding(f"{path}.{name}.{key}", problem)
    for key in sheet.extensions:
        if key in props.SCHEMA:
            yield Finding(f"{path}.extensions.{key}", "extension key shadows a schema property")


def _finite(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _check_experiment(path: str, exp: Experiment, declared: set[str]) -> Iterable[Finding]:
    if not exp.id:
        yield Finding(path, "experiment id is empty")
    if not exp.quality_criterion:
        yield Finding(path, "quality criterion is empty")
    if exp.kind not in RESULT_KINDS:
        yield Finding(path, f"unknown result kind {exp.kind!r}")
    yield from _check_sheet(f"{path}.properties", exp.properties)

    sc = exp.scale
    if sc.max is not None and not sc.min < sc.max:
        yield Finding(f"{path}.scale", "scale minimum must be below scale maximum")

    for sys_id in sorted(set(exp.systems) - declared):
        yield Finding(f"{path}.{sys_id}", "system not in declared system set")

    if exp.kind == SCORES:
        counts = Counter(m.object for m in exp.measurements)
        for sys_id, c in sorted(counts.items()):
            if c > 1:
                yield Finding(f"{path}.scores.{sys_id}", "duplicate system score")
        for m in exp.measurements:
            mpath = f"{path}.scores.{m.object}"
            if not (m.measurand and m.object and m.conditions):
                yield Finding(mpath, "measurand, object and conditions must be non-empty")
            if m.measurand != exp.quality_criterion:
                yield Finding(mpath, "measurand differs from the experiment's quality criterion")
            v = m.value
            if not _finite(v.value):
                yield Finding(mpath, "value is not a finite number")
            elif v.value < v.scale_min or (v.scale_max is not None and v.value > v.scale_max):
                yield Finding(mpath, "value outside scale")
    elif exp.kind == LABELS:
        if not exp.label_set:
            yield Finding(f"{path}.label_set", "label set is empty")
        allowed = set(exp.label_set)
        for aset in exp.annotations:
            keys = Counter((it.item_id, it.span) for it in aset.items)
            for (item, span), c in sorted(keys.items(), key=repr):
                if c > 1:
                    yield Finding(f"{path}.labels.{aset.system}.{item}",
                                  f"duplicate (item, span) {span}")
            for it in aset.items:
                ipath = f"{path}.labels.{aset.system}.{it.item_id}"
                if it.label not in allowed:
                    yield Finding(ipath, f"label {it.label!r} not in declared label set")
                if it.span is not None and it.span[0] > it.span[1]:
                    yield Finding(ipath, "span start after span end")
        dup_sys = [s for s, c in Counter(a.system for a in exp.annotations).items() if c > 1]
        for s in sorted(dup_sys):
            yield Finding(f"{path}.labels.{s}", "system annotated in more than one block")
    elif exp.kind == FINDINGS:
        seen = Counter(frozenset(p[:2]) for p in exp.signs)
        for a, b, sign in exp.signs:
            if a == b:
                yield Finding(f"{path}.signs.{a}", "system compared with itself")
            if sign not in (-1, 0, 1):
                yield Finding(f"{path}.signs.{a}-{b}", "sign must be -1, 0 or +1")
        for pair, c in sorted(seen.items(), key=lambda kv: sorted(kv[0])):
            if c > 1:
                yield Finding(f"{path}.signs.{'-'.join(sorted(pair))}", "duplicate system pair")
        m = len(exp.systems)
        if len(seen) != m * (m - 1) // 2:
            yield Finding(f"{path}.signs", "sign table does not cover every system pair")


def validate_bundle(bundle: StudyBundle) -> list[Finding]:
    """Check every structural invariant of a study; returns one finding per violation.

    The result is sorted, so it does not depend on experiment or measurement order.
    """
    findings: list[Finding] = []
    if not bundle.study_id:
        findings.append(Finding("study", "study id is empty"))
    declared = set(bundle.systems)
    for sys_id, c in Counter(bundle.systems).items():
        if c > 1:
            findings.append(Finding(f"systems.{sys_id}", "system declared twice"))
    for exp_id, c in Counter(e.id for e in bundle.experiments).items():
        if c > 1:
            findings.append(Finding(f"experiments.{exp_id}", "duplicate experiment id"))
    for exp in bundle.experiments:
        findings.extend(_check_experiment(f"experiments.{exp.id}", exp, declared))
    for qc in bundle.quality_criteria():
        # sign tables are compared together with score experiments
        numeric = len(bundle.for_qc(qc, SCORES)) + len(bundle.for_qc(qc, FINDINGS))
        labelled = len(bundle.for_qc(qc, LABELS))
        for kind, count in (("score/findings", numeric), ("labels", labelled)):
            if 0 < count < 2:
                findings.append(Finding(f"qc.{qc}", f"fewer than 2 comparable {kind} experiments"))
    return sorted(findings)
