"""Experiment property schema.

Each property is a measurement condition. Keys are snake_case; the HEDS
question codes (``H2.1`` etc.) are accepted as aliases when reading bundles.
Enumerated properties only take the listed answer options. Options ending in
``(please describe)``/``(please explain)`` in the questionnaire accept a free
text suffix after a colon, e.g. ``"other: grammar checker"``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

FREE_TEXT = "text"
INTEGER = "integer"
ONE_OF = "one_of"
ANY_OF = "any_of"


@dataclass(frozen=True)
class PropertySpec:
    key: str
    code: str | None
    label: str
    kind: str
    options: tuple[str, ...] = ()
    describable: tuple[str, ...] = ()
    human_only: bool = False


_IO_TYPES = (
    "raw/structured data",
    "deep linguistic representation (dlr)",
    "shallow linguistic representation (slr)",
    "text: subsentential unit of text",
    "text: sentence",
    "text: multiple sentences",
    "text: document",
    "text: dialogue",
    "text: other",
    "speech",
    "visual",
    "multi-modal",
    "no input",
    "other",
)

_INPUT_TYPES = _IO_TYPES[:12] + ("control feature",) + _IO_TYPES[12:]

_TASKS = (
    "content selection/determination",
    "content ordering/structuring",
    "aggregation",
    "referring expression generation",
    "lexicalisation",
    "deep generation",
    "surface realisation (slr to text)",
    "feature-controlled text generation",
    "data-to-text generation",
    "dialogue turn generation",
    "question generation",
    "question answering",
    "paraphrasing/lossless simplification",
    "compression/lossy simplification",
    "machine translation",
    "summarisation (text-to-text)",
    "end-to-end text generation",
    "image/video description",
    "post-editing/correction",
    "other",
)

_QA_METHODS = (
    "evaluators are required to be native speakers of the language they evaluate",
    "automatic quality checking methods are used during and/or after evaluation",
    "manual quality checking methods are used during/post evaluation",
    "evaluators are excluded if they fail quality checks (often or badly enough)",
    "some evaluations are excluded because of failed quality checks",
    "other",
    "none of the above (no quality assurance methods used)",
)

_RATING_INSTRUMENTS = (
    "multiple-choice options",
    "check-boxes",
    "slider",
    "n/a (there is no rating instrument)",
    "other",
)

_ELICITATION = (
    "(dis)agreement with quality statement",
    "direct quality estimation",
    "relative quality estimation (including ranking)",
    "counting occurrences in text",
    "qualitative feedback (e.g. via comments entered in a text box)",
    "evaluation through post-editing/annotation",
    "output classification or labelling",
    "user-text interaction measurements",
    "task performance measurements",
    "user-system interaction measurements",
    "other",
)

GENERAL = (
    PropertySpec("test_dataset", None, "Test dataset", FREE_TEXT),
    PropertySpec("metric", None, "Metric", FREE_TEXT),
    PropertySpec("metric_implementation", None, "Metric implementation", FREE_TEXT),
    PropertySpec("run_time_environment", None, "Run-time environment", FREE_TEXT),
    PropertySpec("input_type", "H2.1", "Input type", ANY_OF, _INPUT_TYPES,
                 ("text: other", "no input", "other")),
    PropertySpec("output_type", "H2.2", "Output type", ANY_OF, _IO_TYPES,
                 ("text: other", "no input", "other")),
    PropertySpec("task", "H2.3", "Task", ANY_OF, _TASKS, ("other",)),
    PropertySpec("total_evaluated_items", "H3.1.1", "Total evaluated items", INTEGER),
    PropertySpec("objective_vs_subjective", "H4.2.1", "Objective vs. subjective evaluation mode",
                 ONE_OF, ("objective", "subjective")),
    PropertySpec("absolute_vs_relative", "H4.2.2", "Absolute vs. relative evaluation mode",
                 ONE_OF, ("absolute", "relative")),
    PropertySpec("intrinsic_vs_extrinsic", "H4.2.3", "Intrinsic vs. extrinsic evaluation mode",
                 ONE_OF, ("intrinsic", "extrinsic")),
)

HUMAN_EVAL = tuple(
    PropertySpec(*args, human_only=True)
    for args in (
        ("number_of_evaluators", "H3.2.1", "Number of evaluators", INTEGER),
        ("evaluator_domain_expertise", "H3.2.2.1", "Evaluator domain expertise", ONE_OF,
         ("yes", "no", "n/a"), ("n/a",)),
        ("authors_among_evaluators", "H3.2.2.4", "Authors among evaluators", ONE_OF,
         ("yes", "no", "n/a"), ("n/a",)),
        ("evaluator_training", "H3.2.4", "Evaluator training/practice", FREE_TEXT),
        ("evaluator_type", "H3.2.5", "Evaluator type", FREE_TEXT),
        ("response_collection_tool", "H3.3.2", "Response collection tool/platform", FREE_TEXT),
        ("quality_assurance", "H3.3.3.1", "Quality assurance methods", ANY_OF, _QA_METHODS,
         ("other",)),
        ("standardised_quality_criterion", "H4.3.1.2", "Standardised quality criterion", FREE_TEXT),
        ("rating_instrument_type", "H4.3.5", "Rating instrument type", ONE_OF,
         _RATING_INSTRUMENTS, ("other",)),
        ("verbatim_prompt", "H4.3.7", "Verbatim instrument question or prompt", FREE_TEXT),
        ("response_elicitation", "H4.3.8", "Form of response elicitation", ONE_OF, _ELICITATION,
         ("other",)),
    )
)

SCHEMA: dict[str, PropertySpec] = {p.key: p for p in GENERAL + HUMAN_EVAL}
GENERAL_KEYS = tuple(p.key for p in GENERAL)
HUMAN_EVAL_KEYS = tuple(p.key for p in HUMAN_EVAL)

_ALIASES = {}
for _p in SCHEMA.values():
    _ALIASES[_p.key] = _p.key
    _ALIASES[_p.label.casefold()] = _p.key
    if _p.code:
        _ALIASES[_p.code.casefold()] = _p.key


def canonical_key(key: str) -> str:
    """Map a HEDS code, a display label or a snake_case key to its schema key.

    Unknown keys are returned stripped but otherwise untouched.
    """
    k = str(key).strip()
    return _ALIASES.get(k.casefold(), _ALIASES.get(k, k))


def normalize_text(value: str) -> str:
    return " ".join(str(value).split()).casefold()


def normalize_value(value: Any) -> Any:
    """Comparison form of a property value.

    Strings are whitespace-trimmed and case-folded; multi-select answers
    compare as sets.
    """
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, (int, float)):
        return float(value) if isinstance(value, float) and not value.is_integer() else int(value)
    if isinstance(value, (list, tuple, set, frozenset)):
        return tuple(sorted({normalize_value(v) for v in value}, key=repr))
    return " ".join(str(value).split()).casefold()


def _option_ok(spec: PropertySpec, answer: Any) -> bool:
    if not isinstance(answer, str):
        return False
    a = normalize_text(answer)
    if a in spec.options:
        return True
    # "(please describe)" options carry free text after a colon
    return any(a.startswith(opt + ":") for opt in spec.describable)


def check_value(key: str, value: Any) -> str | None:
    """Return a problem description, or None if ``value`` is in the key's answer domain."""
    spec = SCHEMA[key]
    if spec.kind == FREE_TEXT:
        if isinstance(value, (list, dict)):
            return f"{key} expects a single free-text value"
        return None
    if spec.kind == INTEGER:
        if isinstance(value, bool):
            return f"{key} expects an integer"
        if isinstance(value, int):
            return None if value >= 0 else f"{key} must be non-negative"
        # the questionnaire allows an explanation when the count varies
        if isinstance(value, str) and value.strip():
            return None
        return f"{key} expects an integer"
    if spec.kind == ONE_OF:
        if _option_ok(spec, value):
            return None
        return f"{key}: {value!r} is not one of the permitted answers"
    answers = value if isinstance(value, (list, tuple)) else [value]
    if not answers:
        return f"{key} needs at least one answer"
    bad = [a for a in answers if not _option_ok(spec, a)]
    if bad:
        return f"{key}: {', '.join(map(repr, bad))} not among the permitted answers"
    return None
