"""Rendering assessments as reports.

Three formats share one grid: rows grouped by result type, columns for the
measure and the system / quality-criterion / study levels. Cells where a
measure cannot be applied read ``n/a``; values at a measure's native level
carry a ``*``.

The canonical format is key-sorted JSON with values rounded to 4 decimals
(schema ``qra-report/1``). It can be read back with :func:`read_report`.
"""

from __future__ import annotations

import csv
import io
import json
from typing import Any

from .assessment import LevelledAssessment, SimilarityProfile
from .model import PERMITTED, MeasureResult

SCHEMA_ID = "qra-report/1"
FORMATS = ("json", "csv", "markdown")
CANONICAL_DECIMALS = 4

# display decimals per measure
DISPLAY_DECIMALS = {"cv_star": 2, "p_measure": 3}
DEFAULT_DECIMALS = 3

_SYMBOL = {
    "cv_star": "CV*", "pearson_r": "r", "spearman_rho": "ρ", "kendall_tau_b": "τ-b",
    "kendall_w": "W", "cohen_kappa": "κ (Cohen)", "fleiss_kappa": "κ (Fleiss)",
    "kripp_alpha": "α", "p_measure": "P",
}
_TYPE_MEASURES = {
    "I": ("cv_star",),
    "II": ("pearson_r", "spearman_rho", "kendall_tau_b", "kendall_w"),
    "III": ("cohen_kappa", "fleiss_kappa", "kripp_alpha"),
    "IV": ("p_measure",),
}
NA = "n/a"


def format_value(value: float | None, measure: str, precision: int | None = None) -> str:
    if value is None:
        return "undefined"
    places = precision if precision is not None else DISPLAY_DECIMALS.get(measure, DEFAULT_DECIMALS)
    text = f"{value:.{places}f}"
    if "." in text:
        text = text.rstrip("0").rstrip(".")
    return "0" if text == "-0" else text


def _cell(result: MeasureResult | None, measure: str, level: str, precision) -> str:
    if (measure, level) not in PERMITTED:
        return NA
    if result is None:
        return ""
    text = format_value(result.value, measure, precision)
    return text + "*" if result.native else text


def _measure_label(measure: str, n: int | None) -> str:
    if measure == "cv_star":
        return "(mean) CV*"
    if measure in ("pearson_r", "spearman_rho") and n and n > 2:
        return "mean " + _SYMBOL[measure]
    return _SYMBOL[measure]


def grid_rows(a: LevelledAssessment, precision: int | None = None) -> list[list[str]]:
    """Table rows: [row label, measure, system level, QC level, study level]."""
    rows: list[list[str]] = []
    multi = len(a.qcs) > 1
    present = {r.measure for r in a.results}

    def cells(measure, sys_r=None, qc_r=None, study_r=None):
        return [_cell(sys_r, measure, "system", precision),
                _cell(qc_r, measure, "qc", precision),
                _cell(study_r, measure, "study", precision)]

    # Type I
    if "cv_star" in present:
        study = a.get("cv_star", "study")
        head = ["Type I", "(mean) CV*", "", "", _cell(study, "cv_star", "study", precision)]
        rows.append(head)
        for qc in a.qcs:
            qc_r = a.get("cv_star", "qc", qc)
            if qc_r is None:
                continue
            qc_text = _cell(qc_r, "cv_star", "qc", precision)
            if multi:
                rows.append([f"  QC: {qc}", "(mean) CV*", "", qc_text, ""])
            else:
                head[3] = qc_text
            for system in a.systems:
                r = a.get("cv_star", "system", qc, system)
                if r is not None:
                    rows.append([("    " if multi else "  ") + system, "",
                                 _cell(r, "cv_star", "system", precision), "", ""])

    # Type II
    t2 = [r for r in a.results if r.result_type == "II"]
    if t2:
        rows.append(["Type II", "", "", "", ""])
        for qc in a.qcs:
            qc_rows = [r for r in t2 if r.qc == qc]
            if not qc_rows:
                continue
            if multi:
                rows.append([f"  QC: {qc}", "", "", "", ""])
            for measure in _TYPE_MEASURES["II"]:
                r = next((x for x in qc_rows if x.measure == measure), None)
                if r is not None:
                    rows.append(["", _measure_label(measure, r.n)] + cells(measure, qc_r=r))

    # Type III
    t3 = [r for r in a.results if r.result_type == "III"]
    if t3:
        rows.append(["Type III", "", "", "", ""])
        for qc in a.qcs:
            for measure in _TYPE_MEASURES["III"]:
                qc_r = a.get(measure, "qc", qc)
                if qc_r is None:
                    continue
                label = f"  QC: {qc}" if multi else ""
                rows.append([label, _SYMBOL[measure], "", _cell(qc_r, measure, "qc", precision),
                             ""])
                for system in a.systems:
                    r = a.get(measure, "system", qc, system)
                    if r is not None:
                        rows.append([("    " if multi else "  ") + system, "",
                                     _cell(r, measure, "system", precision), "", ""])
        for measure in _TYPE_MEASURES["III"]:
            st = a.get(measure, "study")
            if st is not None:
                rows.append(["  study mean", _SYMBOL[measure], "", "",
                             _cell(st, measure, "study", precision)])

    # Type IV
    if "p_measure" in present:
        study = a.get("p_measure", "study")
        head = ["Type IV", "P", NA if not multi else "", "",
                _cell(study, "p_measure", "study", precision)]
        rows.append(head)
        for qc in a.qcs:
            r = a.get("p_measure", "qc", qc)
            if r is None:
                continue
            if multi:
                rows.append([f"  QC: {qc}", "P", NA, _cell(r, "p_measure", "qc", precision), ""])
            else:
                head[3] = _cell(r, "p_measure", "qc", precision)
    return rows


def _sample_size_text(a: LevelledAssessment) -> str:
    sizes = sorted(set(a.sample_sizes.values()))
    if len(sizes) == 1:
        return f"n={sizes[0]}"
    return ", ".join(f"n={a.sample_sizes[q]} ({q})" for q in a.qcs)


def header(a: LevelledAssessment) -> list[str]:
    n = _sample_size_text(a)
    return ["Type of result", "Measure applied", f"System level ({n})",
            f"QC level ({n})", f"Study level ({n})"]


def _caveat_lines(a: LevelledAssessment) -> list[str]:
    lines = list(a.caveats)
    for r in a.results:
        where = r.system or r.qc or "study"
        for c in r.caveats:
            if c.startswith("advisory:"):
                continue
            line = f"{_SYMBOL[r.measure]} @ {r.level} ({where}): {c}"
            if line not in lines:
                lines.append(line)
    return lines


def to_markdown(a: LevelledAssessment, precision: int | None = None) -> str:
    head = header(a)
    out = [f"## Reproducibility assessment: {a.study_id}", "",
           f"Degree of reproducibility ({_sample_size_text(a)}); "
           f"quality criteria: {', '.join(a.qcs)}", "",
           "| " + " | ".join(head) + " |",
           "|" + "|".join(["---"] * len(head)) + "|"]
    for row in grid_rows(a, precision):
        first = f"**{row[0]}**" if row[0].startswith("Type") else row[0].replace("  ", "&nbsp;&nbsp;")
        out.append("| " + " | ".join([first] + row[1:]) + " |")
    out += ["", "\\* native level of the measure; n/a = measure does not apply at this level."]
    caveats = _caveat_lines(a)
    if caveats:
        out += ["", "Caveats:"] + [f"- {c}" for c in caveats]
    return "\n".join(out) + "\n"


def to_delimited(a: LevelledAssessment, precision: int | None = None, delimiter: str = ",") -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    writer.writerow(header(a))
    for row in grid_rows(a, precision):
        writer.writerow([row[0].strip()] + row[1:])
    return buf.getvalue()


def _round(x):
    if isinstance(x, float):
        r = round(x, CANONICAL_DECIMALS)
        return 0.0 if r == 0 else r
    return x


def _result_dict(r: MeasureResult) -> dict[str, Any]:
    return {
        "measure": r.measure,
        "result_type": r.result_type,
        "level": r.level,
        "native": r.native,
        "qc": r.qc,
        "system": r.system,
        "n": r.n,
        "value": _round(r.value),
        "scope": list(r.scope),
        "caveats": list(r.caveats),
        "extras": {k: _round(v) for k, v in r.extras.items()},
        "digest": r.digest,
    }


def to_dict(a: LevelledAssessment) -> dict[str, Any]:
    return {
        "schema": SCHEMA_ID,
        "study_id": a.study_id,
        "mode": a.mode,
        "confidence_level": a.confidence_level,
        "quality_criteria": list(a.qcs),
        "systems": list(a.systems),
        "sample_sizes": dict(a.sample_sizes),
        "similarity": {qc: p.to_dict() for qc, p in a.similarity.items()},
        "caveats": list(a.caveats),
        "results": [_result_dict(r) for r in a.results],
    }


def to_canonical_json(a: LevelledAssessment) -> str:
    return json.dumps(to_dict(a), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def read_report(text: str) -> LevelledAssessment:
    """Rebuild an assessment from its canonical JSON form (values as rounded there)."""
    d = json.loads(text)
    if d.get("schema") != SCHEMA_ID:
        raise ValueError(f"not a {SCHEMA_ID} document")
    results = tuple(
        MeasureResult(r["measure"], r["level"], r["value"], qc=r["qc"], system=r["system"],
                      n=r["n"], scope=tuple(r["scope"]), caveats=tuple(r["caveats"]),
                      extras=dict(r["extras"]), digest=r["digest"])
        for r in d["results"])
    similarity = {
        qc: SimilarityProfile(tuple(p["same"]),
                              tuple((k, tuple(v)) for k, v in p["different"].items()),
                              tuple(p["coverage"]))
        for qc, p in d["similarity"].items()}
    return LevelledAssessment(
        study_id=d["study_id"], qcs=tuple(d["quality_criteria"]), systems=tuple(d["systems"]),
        sample_sizes=d["sample_sizes"], results=results, similarity=similarity,
        caveats=tuple(d["caveats"]), mode=d["mode"], confidence_level=d["confidence_level"])


def emit_report(a: LevelledAssessment, fmt: str = "markdown", precision: int | None = None) -> str:
    if fmt == "json":
        return to_canonical_json(a)
    if fmt == "csv":
        return to_delimited(a, precision)
    if fmt == "markdown":
        return to_markdown(a, precision)
    raise ValueError(f"unknown report format {fmt!r}; choose from {', '.join(FORMATS)}")
