"""Full reproducibility assessment of a study bundle.

Experiments are first compared on their property sheets (per quality
criterion); the comparability gate either refuses differing experiments
(strict) or lets them through with caveats (lenient). Each result kind is
then routed to its measures:

    scores   -> CV* (type I), correlations (type II), P (type IV)
    labels   -> kappa / alpha (type III)
    findings -> P (type IV)

and values are aggregated to system, quality-criterion and study level.
"""

from __future__ import annotations

import hashlib
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

from . import properties as props
from .agreement import REFERENCE_ONLY, LabelGrid, cohen_kappa, fleiss_kappa, kripp_alpha
from .bundle import shift_to_zero
from .correlation import (AlignedScoreMatrix, kendall_tau_b, kendall_w, pairwise_mean,
                          pearson_r, spearman_rho)
from .errors import DomainError, GateRefusal, ValidationFailed
from .findings import PairwiseSignTable, averaged_p, p_from_tables, pooled_p, sign_table
from .model import (FINDINGS, LABELS, SCORES, Experiment, MeasureResult, PropertySheet,
                    StudyBundle, validate_bundle)
from .precision import CvOptions, band_caveat, cv_star

STRICT = "strict"
LENIENT = "lenient"


# --- experiment similarity -------------------------------------------------

@dataclass(frozen=True)
class SimilarityProfile:
    same: tuple[str, ...]
    different: tuple[tuple[str, tuple[Any, ...]], ...]
    coverage: tuple[str, ...]

    @property
    def different_keys(self) -> tuple[str, ...]:
        return tuple(k for k, _ in self.different)

    def to_dict(self) -> dict:
        return {
            "same": list(self.same),
            "different": {k: list(v) for k, v in self.different},
            "coverage": list(self.coverage),
        }


def similarity_profile(sheets: Sequence[PropertySheet]) -> SimilarityProfile:
    """Classify every property key as same / different / not covered by all sheets."""
    flats = [s.flat() for s in sheets]
    keys = sorted(set().union(*flats)) if flats else []
    same, different, coverage = [], [], []
    for key in keys:
        if any(key not in f for f in flats):
            coverage.append(key)
            continue
        normed = {repr(props.normalize_value(f[key])) for f in flats}
        if len(normed) == 1:
            same.append(key)
        else:
            different.append((key, tuple(f[key] for f in flats)))
    return SimilarityProfile(tuple(same), tuple(different), tuple(coverage))


@dataclass(frozen=True)
class GateDecision:
    comparable: bool
    reasons: tuple[str, ...] = ()
    caveats: tuple[str, ...] = ()


def gate(profile: SimilarityProfile, mode: str = STRICT) -> GateDecision:
    if mode not in (STRICT, LENIENT):
        raise ValueError(f"unknown gate mode {mode!r}")
    reasons = tuple(f"property {k!r} differs: {', '.join(map(str, v))}"
                    for k, v in profile.different)
    caveats = []
    if profile.coverage:
        caveats.append("properties not recorded for every experiment: "
                       + ", ".join(profile.coverage))
    if mode == STRICT:
        return GateDecision(not reasons, reasons, tuple(caveats))
    caveats = [f"differences in outcome are expected: {r}" for r in reasons] + caveats
    return GateDecision(True, (), tuple(caveats))


def _known_key(key: str, experiments: Iterable[Experiment]) -> bool:
    return key in props.SCHEMA or any(key in e.properties.extensions for e in experiments)


def partition(experiments: Sequence[Experiment], keys: Sequence[str]):
    """Group experiments by their normalized values on ``keys``.

    Returns ``[(value_tuple, [experiments...]), ...]`` sorted by value tuple;
    a missing property contributes None.
    """
    keys = [props.canonical_key(k) for k in keys]
    unknown = [k for k in keys if not _known_key(k, experiments)]
    if unknown:
        raise DomainError(f"unknown property key(s): {', '.join(unknown)}")
    groups: dict[tuple, list[Experiment]] = defaultdict(list)
    for exp in experiments:
        flat = exp.properties.flat()
        groups[tuple(props.normalize_value(flat.get(k)) for k in keys)].append(exp)
    return sorted(groups.items(), key=lambda kv: repr(kv[0]))


# --- assessment -----------------------------------------------------------

@dataclass(frozen=True)
class AssessmentOptions:
    mode: str = STRICT
    confidence_level: float = 0.95
    kappa: str = "cohen"         # variant for two experiments: cohen | fleiss
    p_aggregation: str = "pool"  # study-level P: pool | mean
    p_exclude_ties: bool = False


@dataclass(frozen=True)
class LevelledAssessment:
    study_id: str
    qcs: tuple[str, ...]
    systems: tuple[str, ...]
    sample_sizes: Mapping[str, int]
    results: tuple[MeasureResult, ...]
    similarity: Mapping[str, SimilarityProfile]
    caveats: tuple[str, ...] = ()
    mode: str = STRICT
    confidence_level: float = 0.95

    @property
    def system_level(self) -> dict[tuple[str, str], list[MeasureResult]]:
        out = defaultdict(list)
        for r in self.results:
            if r.level == "system":
                out[(r.qc, r.system)].append(r)
        return dict(out)

    @property
    def qc_level(self) -> dict[str, list[MeasureResult]]:
        out = defaultdict(list)
        for r in self.results:
            if r.level == "qc":
                out[r.qc].append(r)
        return dict(out)

    @property
    def study_level(self) -> list[MeasureResult]:
        return [r for r in self.results if r.level == "study"]

    def get(self, measure, level, qc=None, system=None) -> MeasureResult | None:
        for r in self.results:
            if (r.measure, r.level, r.qc, r.system) == (measure, level, qc, system):
                return r
        return None


def _digest(payload) -> str:
    blob = json.dumps(payload, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values)


def _qc_systems(bundle: StudyBundle, exps: Sequence[Experiment]) -> list[str]:
    present = set().union(*(e.systems for e in exps)) if exps else set()
    order = [s for s in bundle.systems if s in present]
    return order + sorted(present - set(order))


def assess_type1(bundle: StudyBundle, qc: str, opts: AssessmentOptions = AssessmentOptions()):
    """System-level CV* per system and their mean at quality-criterion level."""
    exps = bundle.for_qc(qc, SCORES)
    cv_opts = CvOptions(confidence_level=opts.confidence_level)
    human = any(e.properties.is_human for e in exps)
    results = []
    for system in _qc_systems(bundle, exps):
        values, sources = [], []
        for e in exps:
            for m in e.measurements:
                if m.object == system:
                    values.append(shift_to_zero([m.value.value], m.value.scale_min)[0])
                    sources.append(e.id)
        caveats = []
        if len(values) < len(exps):
            caveats.append(f"scored in {len(values)} of {len(exps)} experiments")
        try:
            st = cv_star(values, cv_opts)
        except DomainError as err:
            results.append(MeasureResult(
                "cv_star", "system", None, qc=qc, system=system, n=len(values),
                scope=(system,), caveats=tuple(caveats + [f"excluded: {err}"]),
                digest=_digest([sources, values])))
            continue
        caveats += list(st.caveats)
        caveats.append(band_caveat(st.cv_star, human))
        results.append(MeasureResult(
            "cv_star", "system", st.cv_star, qc=qc, system=system, n=st.n, scope=(system,),
            caveats=tuple(caveats),
            extras={"mean": st.mean, "s": st.s, "s_star": st.s_star,
                    "ci_low": st.ci_low, "ci_high": st.ci_high},
            digest=_digest([sources, values])))
    results.append(type1_qc_mean(results, qc, len(exps)))
    return results


def type1_qc_mean(system_results: Sequence[MeasureResult], qc: str, n: int) -> MeasureResult:
    usable = [r for r in system_results if r.level == "system" and r.value is not None]
    skipped = [r.system for r in system_results if r.level == "system" and r.value is None]
    caveats = [f"systems without CV* left out of the mean: {', '.join(skipped)}"] if skipped else []
    value = _mean([r.value for r in usable]) if usable else None
    if value is None:
        caveats.append("no system-level CV* available")
    return MeasureResult("cv_star", "qc", value, qc=qc, n=n,
                         scope=tuple(r.system for r in usable), caveats=tuple(caveats),
                         digest=_digest([r.value for r in usable]))


def type1_study_mean(system_results: Sequence[MeasureResult], n_qcs: int) -> MeasureResult:
    """Mean over every computable system-level CV* in the study (all criteria pooled)."""
    usable = [r for r in system_results if r.level == "system" and r.value is not None]
    if not usable:
        return MeasureResult("cv_star", "study", None, caveats=("no system-level CV* available",))
    caveats = ()
    if n_qcs > 1:
        caveats = ("study-level mean CV* hides differences between quality criteria",)
    return MeasureResult("cv_star", "study", _mean([r.value for r in usable]),
                         scope=tuple(sorted({r.qc for r in usable})), caveats=caveats,
                         digest=_digest([r.value for r in usable]))


def score_matrix(bundle: StudyBundle, qc: str) -> AlignedScoreMatrix:
    exps = bundle.for_qc(qc, SCORES)
    systems = _qc_systems(bundle, exps)
    rows, missing = [], []
    for e in exps:
        sc = e.scores()
        missing += [f"({e.id}, {s})" for s in systems if s not in sc]
        rows.append([sc.get(s, math.nan) for s in systems])
    if missing:
        raise DomainError("missing score cells: " + ", ".join(missing))
    return AlignedScoreMatrix(tuple(systems), tuple(e.id for e in exps), rows)


def _safe(measure, qc, n, fn, *args, scope=(), extras=None, caveats=()):
    try:
        value = fn(*args)
    except DomainError as err:
        return MeasureResult(measure, "qc", None, qc=qc, n=n, scope=scope,
                             caveats=tuple(caveats) + (f"undefined: {err}",))
    return MeasureResult(measure, "qc", value, qc=qc, n=n, scope=scope,
                         caveats=tuple(caveats), extras=extras or {})


def assess_type2(bundle: StudyBundle, qc: str, opts: AssessmentOptions = AssessmentOptions()):
    """Correlation of per-system scores between experiments, quality-criterion level only."""
    matrix = score_matrix(bundle, qc)
    n = len(matrix.experiments)
    scope = matrix.systems
    digest = _digest([matrix.experiments, matrix.systems, matrix.scores.tolist()])
    if n == 2:
        x, y = matrix.scores
        out = [_safe("pearson_r", qc, n, pearson_r, x, y, scope=scope),
               _safe("spearman_rho", qc, n, spearman_rho, x, y, scope=scope),
               _safe("kendall_tau_b", qc, n, kendall_tau_b, x, y, scope=scope)]
    else:
        out = []
        for measure, which in (("pearson_r", "pearson"), ("spearman_rho", "spearman")):
            try:
                pm = pairwise_mean(matrix, which)
            except DomainError as err:
                out.append(MeasureResult(measure, "qc", None, qc=qc, n=n, scope=scope,
                                         caveats=(f"undefined: {err}",)))
                continue
            cav = tuple(f"pair ({a}, {b}) left out: {which} undefined" for a, b in pm.excluded)
            out.append(MeasureResult(measure, "qc", pm.value, qc=qc, n=n, scope=scope,
                                     caveats=cav, extras={"pairs": pm.pairs_used}))
        out.append(_safe("kendall_w", qc, n, kendall_w, matrix, scope=scope))
    return [MeasureResult(r.measure, r.level, r.value, qc=r.qc, n=r.n, scope=r.scope,
                          caveats=r.caveats, extras=r.extras, digest=digest) for r in out]


def label_grid(bundle: StudyBundle, qc: str) -> tuple[LabelGrid, tuple[str, ...]]:
    exps = bundle.for_qc(qc, LABELS)
    caveats = []
    label_set = list(dict.fromkeys(lab for e in exps for lab in e.label_set))
    if len({tuple(sorted(map(str, e.label_set))) for e in exps}) > 1:
        caveats.append("declared label sets differ between experiments; their union is used")
    cells: dict[tuple, dict[str, Any]] = defaultdict(dict)
    for e in exps:
        for aset in e.annotations:
            for it in aset.items:
                cells[(aset.system, it.item_id, it.span)][e.id] = it.label
    units = sorted(cells, key=lambda u: (u[0], u[1], (-1, -1) if u[2] is None else u[2]))
    raters = tuple(e.id for e in exps)
    rows = tuple(tuple(cells[u].get(r) for r in raters) for u in units)
    unpaired = sum(1 for row in rows if sum(x is not None for x in row) < 2)
    if unpaired:
        caveats.append(f"{unpaired} unit(s) labelled by fewer than 2 experiments")
    return LabelGrid(tuple(units), raters, rows, tuple(label_set)), tuple(caveats)


def _agreement(grid: LabelGrid, level: str, qc: str, system: str | None,
               opts: AssessmentOptions, caveats: Sequence[str]) -> list[MeasureResult]:
    n = len(grid.raters)
    if n == 2 and opts.kappa == "cohen":
        kappa_name, kappa_fn = "cohen_kappa", cohen_kappa
        kcav = ("kappa variant: Cohen's for two experiments (Fleiss's selectable)",)
    else:
        kappa_name, kappa_fn = "fleiss_kappa", fleiss_kappa
        kcav = ()
    digest = _digest([grid.raters, [list(map(str, u)) for u in grid.units],
                      [list(map(str, r)) for r in grid.labels]])
    scope = (system,) if system else tuple(dict.fromkeys(u[0] for u in grid.units))
    out = []
    for name, fn, extra in ((kappa_name, kappa_fn, kcav), ("kripp_alpha", kripp_alpha, ())):
        try:
            value, cav = fn(grid), ()
        except DomainError as err:
            value, cav = None, (f"undefined: {err}",)
        out.append(MeasureResult(name, level, value, qc=qc, system=system, n=n, scope=scope,
                                 caveats=tuple(caveats) + extra + cav, digest=digest))
    return out


def assess_type3(bundle: StudyBundle, qc: str, opts: AssessmentOptions = AssessmentOptions()):
    """Agreement between label sets per system and over the whole criterion."""
    grid, caveats = label_grid(bundle, qc)
    results = []
    for system in _qc_systems(bundle, bundle.for_qc(qc, LABELS)):
        sub = grid.for_system(system)
        if sub.units:
            results += _agreement(sub, "system", qc, system, opts, ())
    results += _agreement(grid, "qc", qc, None, opts, caveats)
    return results


def type3_study_means(qc_results: Sequence[MeasureResult], label_sets: Mapping[str, tuple]):
    out = []
    for measure in ("cohen_kappa", "fleiss_kappa", "kripp_alpha"):
        vals = [r for r in qc_results if r.measure == measure and r.value is not None]
        if not vals:
            continue
        caveats = [REFERENCE_ONLY]
        if len({tuple(sorted(map(str, ls))) for ls in label_sets.values()}) > 1:
            caveats.append("label sets differ across QCs")
        out.append(MeasureResult(measure, "study", _mean([r.value for r in vals]),
                                 scope=tuple(r.qc for r in vals), caveats=tuple(caveats),
                                 digest=_digest([r.value for r in vals])))
    return out


def _sign_tables(bundle: StudyBundle, qc: str) -> list[PairwiseSignTable]:
    exps = bundle.for_qc(qc, SCORES) + bundle.for_qc(qc, FINDINGS)
    systems = _qc_systems(bundle, exps)
    tables = []
    for e in exps:
        if e.kind == SCORES:
            tables.append(sign_table(e.scores(), systems, experiment=e.id))
        else:
            tables.append(PairwiseSignTable.from_triples(e.id, e.signs, systems))
    return tables


def assess_type4(bundle: StudyBundle, opts: AssessmentOptions = AssessmentOptions(),
                 qcs: Sequence[str] | None = None):
    """P per quality criterion and, over all criteria, at study level."""
    results, counts, skipped = [], [], []
    for qc in (qcs if qcs is not None else bundle.quality_criteria()):
        exps = bundle.for_qc(qc, SCORES) + bundle.for_qc(qc, FINDINGS)
        if len(exps) < 2:
            continue
        try:
            tables = _sign_tables(bundle, qc)
            res = p_from_tables(tables, exclude_ties=opts.p_exclude_ties)
        except DomainError as err:
            skipped.append(f"{qc}: {err}")
            results.append(MeasureResult("p_measure", "qc", None, qc=qc, n=len(exps),
                                         caveats=(f"skipped: {err}",)))
            continue
        caveats = ["findings-only experiments: " + ", ".join(e.id for e in exps if e.kind == FINDINGS)
                   ] if any(e.kind == FINDINGS for e in exps) else []
        if opts.p_exclude_ties:
            caveats.append("tied system pairs excluded")
        counts.append((res.matches, res.comparisons))
        results.append(MeasureResult(
            "p_measure", "qc", res.p, qc=qc, n=len(exps), scope=tables[0].systems,
            caveats=tuple(caveats),
            extras={"matches": res.matches, "comparisons": res.comparisons},
            digest=_digest([[t.experiment, sorted(map(list, t.signs.items()))] for t in tables])))
    if counts:
        pooled, averaged = pooled_p(counts), averaged_p(counts)
        value = pooled if opts.p_aggregation == "pool" else averaged
        caveats = [f"skipped criteria: {'; '.join(skipped)}"] if skipped else []
        if len(counts) > 1 and not math.isclose(pooled, averaged, abs_tol=1e-12):
            other = "averaged" if opts.p_aggregation == "pool" else "pooled"
            caveats.append(f"{other} alternative: {averaged if other == 'averaged' else pooled:.4f}")
        results.append(MeasureResult(
            "p_measure", "study", value, scope=tuple(r.qc for r in results if r.value is not None),
            caveats=tuple(caveats),
            extras={"matches": sum(m for m, _ in counts), "comparisons": sum(c for _, c in counts)},
            digest=_digest(counts)))
    return results


def assess_study(bundle: StudyBundle, opts: AssessmentOptions = AssessmentOptions()
                 ) -> LevelledAssessment:
    findings = validate_bundle(bundle)
    if findings:
        raise ValidationFailed(findings)
    qcs = bundle.quality_criteria()
    profiles, caveats = {}, []
    for qc in qcs:
        exps = bundle.for_qc(qc)
        profile = similarity_profile([e.properties for e in exps])
        profiles[qc] = profile
        decision = gate(profile, opts.mode)
        if not decision.comparable:
            raise GateRefusal(qc, profile, decision.reasons)
        caveats += [f"{qc}: {c}" for c in decision.caveats]
    if opts.confidence_level == 0.95:
        caveats.append("s* confidence intervals use the default 0.95 level")

    results: list[MeasureResult] = []
    type1_systems: list[MeasureResult] = []
    type3_qc: list[MeasureResult] = []
    label_sets = {}
    sample_sizes = {}
    for qc in qcs:
        scores = bundle.for_qc(qc, SCORES)
        labels = bundle.for_qc(qc, LABELS)
        sample_sizes[qc] = max(len(scores) + len(bundle.for_qc(qc, FINDINGS)), len(labels))
        if len(scores) >= 2:
            t1 = assess_type1(bundle, qc, opts)
            results += t1
            type1_systems += [r for r in t1 if r.level == "system"]
            try:
                results += assess_type2(bundle, qc, opts)
            except DomainError as err:
                caveats.append(f"{qc}: correlation measures skipped: {err}")
        if len(labels) >= 2:
            t3 = assess_type3(bundle, qc, opts)
            results += t3
            type3_qc += [r for r in t3 if r.level == "qc"]
            label_sets[qc] = tuple(dict.fromkeys(x for e in labels for x in e.label_set))
    if type1_systems:
        results.append(type1_study_mean(type1_systems, len({r.qc for r in type1_systems})))
    if type3_qc:
        results += type3_study_means(type3_qc, label_sets)
    results += assess_type4(bundle, opts, qcs)

    return LevelledAssessment(
        study_id=bundle.study_id,
        qcs=tuple(qcs),
        systems=tuple(bundle.systems),
        sample_sizes=sample_sizes,
        results=tuple(results),
        similarity=profiles,
        caveats=tuple(caveats),
        mode=opts.mode,
        confidence_level=opts.confidence_level,
    )
