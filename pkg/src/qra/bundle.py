"""Reading and writing study bundle files.

A bundle is a YAML document::

    study: example-1
    systems: [SVM, GeDi, DExpert]
    experiments:
      - id: original
        qc: Fluency
        scale: {min: 1, max: 5}          # max may be "unbounded"
        properties:
          general: {test_dataset: ..., H4.2.1: subjective}
          human_eval: {number_of_evaluators: 3}
          extensions: {random_seed: 42}
        scores: {SVM: 3.71, GeDi: 3.2, DExpert: 3.9}

Label experiments replace ``scores`` with ``label_set`` and ``labels`` (a
list of ``{system, item, label, span: [start, end]}``); experiments known
only from published findings give ``findings`` as ``[system_a, system_b,
sign]`` triples, the sign being that of score(a) - score(b).

Property keys may be written as schema keys, display labels or HEDS codes.
A scale is required for score experiments that carry a human-evaluation
block; metric experiments default to a scale starting at 0 with no maximum.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Any, Sequence

import jsonschema
import yaml

from . import properties as props
from .errors import BundleSyntaxError, DomainError, SchemaError
from .model import (FINDINGS, LABELS, SCORES, AnnotationSet, Experiment, Label, Measurement,
                    PropertySheet, QuantityValue, Scale, StudyBundle)

_ID = {"type": ["string", "integer"]}
_NUMBER = {"type": "number"}
_SCALAR = {"type": ["string", "number", "boolean", "null"]}
_VALUE = {"anyOf": [_SCALAR, {"type": "array", "items": _SCALAR}]}

BUNDLE_SCHEMA = {
    "type": "object",
    "required": ["study", "systems", "experiments"],
    "additionalProperties": False,
    "properties": {
        "study": _ID,
        "systems": {"type": "array", "items": _ID, "minItems": 1},
        "experiments": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "qc"],
                "additionalProperties": False,
                "properties": {
                    "id": _ID,
                    "qc": _ID,
                    "time": {"type": ["string", "null"]},
                    "scale": {
                        "type": "object",
                        "required": ["min"],
                        "additionalProperties": False,
                        "properties": {
                            "min": _NUMBER,
                            "max": {"anyOf": [_NUMBER, {"type": "null"},
                                              {"const": "unbounded"}]},
                        },
                    },
                    "properties": {
                        "type": "object",
                        "additionalProperties": False,
                        "properties": {
                            "general": {"type": "object", "additionalProperties": _VALUE},
                            "human_eval": {"type": "object", "additionalProperties": _VALUE},
                            "extensions": {"type": "object", "additionalProperties": _VALUE},
                        },
                    },
                    "scores": {"type": "object", "additionalProperties": _NUMBER,
                               "minProperties": 1},
                    "label_set": {"type": "array", "items": _ID, "minItems": 1},
                    "labels": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["system", "item", "label"],
                            "additionalProperties": False,
                            "properties": {
                                "system": _ID,
                                "item": _ID,
                                "label": _ID,
                                "span": {"anyOf": [
                                    {"type": "null"},
                                    {"type": "array", "items": {"type": "integer"},
                                     "minItems": 2, "maxItems": 2},
                                ]},
                            },
                        },
                    },
                    "findings": {
                        "type": "array",
                        "items": {"type": "array", "prefixItems": [_ID, _ID, {"enum": [-1, 0, 1]}],
                                  "minItems": 3, "maxItems": 3},
                    },
                },
                "oneOf": [
                    {"required": ["scores"], "not": {"anyOf": [{"required": ["labels"]},
                                                               {"required": ["findings"]}]}},
                    {"required": ["labels", "label_set"], "not": {"anyOf": [
                        {"required": ["scores"]}, {"required": ["findings"]}]}},
                    {"required": ["findings"], "not": {"anyOf": [{"required": ["scores"]},
                                                                 {"required": ["labels"]}]}},
                ],
            },
        },
    },
}

_VALIDATOR = jsonschema.Draft202012Validator(BUNDLE_SCHEMA)


def shift_to_zero(values: Sequence[float], scale_min: float) -> list[float]:
    """Move scores onto a scale starting at 0 so CV* does not depend on the scale's origin."""
    below = [v for v in values if v < scale_min]
    if below:
        raise DomainError(f"value(s) {below} below scale minimum {scale_min}")
    if scale_min == 0:
        return list(values)
    return [v - scale_min for v in values]


def _readable_path(doc: dict, path) -> str:
    parts = list(path)
    out = []
    i = 0
    while i < len(parts):
        p = parts[i]
        if p == "experiments" and i + 1 < len(parts) and isinstance(parts[i + 1], int):
            idx = parts[i + 1]
            try:
                ident = doc["experiments"][idx].get("id", idx)
            except (KeyError, IndexError, AttributeError, TypeError):
                ident = idx
            out.append(f"experiments[{ident}]")
            i += 2
            continue
        out.append(f"[{p}]" if isinstance(p, int) else str(p))
        i += 1
    return ".".join(out).replace(".[", "[") or "<document>"


def _canonical_block(exp_path: str, block_name: str, block: dict, allowed) -> dict:
    out = {}
    for raw_key, value in block.items():
        key = props.canonical_key(raw_key) if allowed is not None else str(raw_key)
        if allowed is not None and key not in allowed:
            raise SchemaError(f"{exp_path}.properties.{block_name}.{raw_key}",
                              "unknown property key (put free-form keys under extensions)")
        if key in out:
            raise SchemaError(f"{exp_path}.properties.{block_name}.{raw_key}",
                              "property given twice")
        out[key] = value
    return out


def _parse_scale(raw) -> Scale:
    if raw is None:
        return Scale(0.0, None, declared=False)
    hi = raw.get("max")
    if hi in (None, "unbounded") or (isinstance(hi, float) and math.isinf(hi)):
        hi = None
    else:
        hi = float(hi)
    return Scale(float(raw["min"]), hi, declared=True)


def _build_experiment(raw: dict) -> Experiment:
    exp_id = str(raw["id"])
    qc = str(raw["qc"])
    path = f"experiments[{exp_id}]"
    praw = raw.get("properties") or {}
    human = praw.get("human_eval")
    sheet = PropertySheet(
        general=_canonical_block(path, "general", praw.get("general") or {}, props.GENERAL_KEYS),
        human_eval=None if human is None else _canonical_block(path, "human_eval", human,
                                                               props.HUMAN_EVAL_KEYS),
        extensions=_canonical_block(path, "extensions", praw.get("extensions") or {}, None),
    )
    scale = _parse_scale(raw.get("scale"))
    time = raw.get("time")
    if "scores" in raw:
        if sheet.is_human and not scale.declared:
            raise SchemaError(f"{path}.scale",
                              f"experiment {exp_id!r} rates on a human-evaluation instrument "
                              "and must declare its scale")
        measurements = tuple(
            Measurement(qc, str(system), exp_id,
                        QuantityValue(float(v), scale.min, scale.max),
                        None if time is None else str(time))
            for system, v in raw["scores"].items())
        return Experiment(exp_id, qc, SCORES, sheet, measurements=measurements, scale=scale)
    if "labels" in raw:
        by_system: dict[str, list[Label]] = {}
        for item in raw["labels"]:
            span = item.get("span")
            by_system.setdefault(str(item["system"]), []).append(
                Label(str(item["item"]), str(item["label"]),
                      None if span is None else (int(span[0]), int(span[1]))))
        annotations = tuple(AnnotationSet(s, tuple(items)) for s, items in by_system.items())
        return Experiment(exp_id, qc, LABELS, sheet, annotations=annotations,
                          label_set=tuple(str(x) for x in raw["label_set"]), scale=scale)
    signs = tuple((str(a), str(b), int(s)) for a, b, s in raw["findings"])
    return Experiment(exp_id, qc, FINDINGS, sheet, signs=signs, scale=scale)


def parse_bundle(document: str) -> StudyBundle:
    try:
        doc = yaml.safe_load(document)
    except yaml.MarkedYAMLError as err:
        mark = err.problem_mark or err.context_mark
        msg = err.problem or str(err)
        if mark is None:
            raise BundleSyntaxError(msg) from None
        raise BundleSyntaxError(msg, mark.line + 1, mark.column + 1) from None
    except yaml.YAMLError as err:
        raise BundleSyntaxError(str(err)) from None
    if not isinstance(doc, dict):
        raise SchemaError("<document>", "a bundle must be a mapping with study, systems, experiments")
    errors = sorted(_VALIDATOR.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        err = jsonschema.exceptions.best_match(errors)
        raise SchemaError(_readable_path(doc, err.absolute_path), err.message)
    experiments = tuple(_build_experiment(raw) for raw in doc["experiments"])
    return StudyBundle(str(doc["study"]), tuple(str(s) for s in doc["systems"]), experiments)


def load_bundle(path) -> StudyBundle:
    return parse_bundle(Path(path).read_text(encoding="utf-8"))


def _plain(value: Any) -> Any:
    if isinstance(value, tuple):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    return value


def bundle_to_dict(bundle: StudyBundle) -> dict:
    experiments = []
    for e in bundle.experiments:
        raw: dict[str, Any] = {"id": e.id, "qc": e.quality_criterion}
        if e.measurements and e.measurements[0].time is not None:
            raw["time"] = e.measurements[0].time
        if e.scale.declared:
            raw["scale"] = {"min": e.scale.min,
                            "max": "unbounded" if e.scale.max is None else e.scale.max}
        sheet = e.properties
        block: dict[str, Any] = {"general": _plain(dict(sheet.general))}
        if sheet.human_eval is not None:
            block["human_eval"] = _plain(dict(sheet.human_eval))
        if sheet.extensions:
            block["extensions"] = _plain(dict(sheet.extensions))
        raw["properties"] = block
        if e.kind == SCORES:
            raw["scores"] = {m.object: m.value.value for m in e.measurements}
        elif e.kind == LABELS:
            raw["label_set"] = list(e.label_set)
            raw["labels"] = [
                {"system": a.system, "item": it.item_id, "label": it.label,
                 **({"span": list(it.span)} if it.span is not None else {})}
                for a in e.annotations for it in a.items]
        else:
            raw["findings"] = [list(t) for t in e.signs]
        experiments.append(raw)
    return {"study": bundle.study_id, "systems": list(bundle.systems), "experiments": experiments}


def dump_bundle(bundle: StudyBundle) -> str:
    return yaml.safe_dump(bundle_to_dict(bundle), sort_keys=False, allow_unicode=True,
                          default_flow_style=None, width=100)
