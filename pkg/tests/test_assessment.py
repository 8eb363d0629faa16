from pathlib import Path

import pytest

from builders import good_bundle, labels_doc, scores_doc
from qra.assessment import (LENIENT, STRICT, AssessmentOptions, assess_study, assess_type1,
                            assess_type2, assess_type3, assess_type4, gate, partition,
                            similarity_profile, type3_study_means)
from qra.bundle import load_bundle, parse_bundle
from qra.errors import DomainError, GateRefusal, ValidationFailed
from qra.model import MeasureResult, PropertySheet
from qra.report import to_canonical_json

DATA = Path(__file__).parent / "data"


def sheet(**general):
    return PropertySheet(general=general)


def test_similarity_profile_examples():
    same = similarity_profile([sheet(test_dataset="d", metric="f1"),
                               sheet(test_dataset="D ", metric="f1")])
    assert same.different == () and same.coverage == ()
    assert same.same == ("metric", "test_dataset")
    diff = similarity_profile([sheet(test_dataset="a", metric="f1"),
                               sheet(test_dataset="b", metric="f1")])
    assert diff.different == (("test_dataset", ("a", "b")),)
    human = PropertySheet(general={"metric": "f1"}, human_eval={"number_of_evaluators": 3})
    cov = similarity_profile([sheet(metric="f1"), human])
    assert cov.coverage == ("number_of_evaluators",)
    assert set(cov.same) | set(cov.different_keys) | set(cov.coverage) == {
        "metric", "number_of_evaluators"}


def test_gate_examples():
    clean = similarity_profile([sheet(metric="f1"), sheet(metric="f1")])
    assert gate(clean, STRICT).comparable
    by_data = similarity_profile([sheet(test_dataset="a"), sheet(test_dataset="b")])
    refused = gate(by_data, STRICT)
    assert not refused.comparable and "test_dataset" in refused.reasons[0]
    by_env = similarity_profile([sheet(run_time_environment="gpu"),
                                 sheet(run_time_environment="cpu")])
    lenient = gate(by_env, LENIENT)
    assert lenient.comparable
    assert "run_time_environment" in lenient.caveats[0]
    assert lenient.caveats[0].startswith("differences in outcome are expected")


def _eight_experiments():
    general = {f"e{k}": {"test_dataset": "D" if k < 4 else f"D{k}"} for k in range(8)}
    ext = {f"e{k}": {"random_seed": 42 if k < 4 else k} for k in range(8)}
    rows = {f"e{k}": [0.5, 0.6 + k / 100, 0.7] for k in range(8)}
    return parse_bundle(scores_doc(rows, general=general, extensions=ext, scale=None))


def test_partition_examples():
    exps = _eight_experiments().experiments
    groups = partition(exps, ["test_dataset", "random_seed"])
    sizes = sorted(len(g) for _, g in groups)
    assert sizes == [1, 1, 1, 1, 4]
    (shared,) = [g for _, g in groups if len(g) == 4]
    assert [e.id for e in shared] == ["e0", "e1", "e2", "e3"]
    ((_, everything),) = partition(exps, [])
    assert len(everything) == 8
    singles = partition(exps[4:], ["random_seed"])
    assert [len(g) for _, g in singles] == [1, 1, 1, 1]
    assert partition(exps, ["Test dataset"]) == partition(exps, ["test_dataset"])
    with pytest.raises(DomainError, match="unknown property"):
        partition(exps, ["colour"])


def test_partition_order_is_deterministic():
    exps = list(_eight_experiments().experiments)
    a = partition(exps, ["random_seed"])
    b = partition(exps[::-1], ["random_seed"])
    assert [k for k, _ in a] == [k for k, _ in b]


def test_type1_aggregation_closure():
    b = load_bundle(DATA / "example2.yaml")
    a = assess_study(b)
    systems = [r for r in a.results if r.measure == "cv_star" and r.level == "system"]
    for qc in a.qcs:
        own = [r.value for r in systems if r.qc == qc]
        assert a.get("cv_star", "qc", qc).value == pytest.approx(sum(own) / len(own), abs=1e-12)
    study = a.get("cv_star", "study").value
    assert study == pytest.approx(sum(r.value for r in systems) / len(systems), abs=1e-12)


def test_type1_uses_shifted_scores():
    b = parse_bundle(scores_doc({"x": [3, 3, 3], "y": [4, 4, 4]}))
    res = assess_type1(b, "Fluency")
    assert res[0].value == pytest.approx(39.8802, abs=1e-4)


def test_type1_excludes_uncomputable_systems():
    b = parse_bundle(scores_doc({"x": [1, 2, 3], "y": [1, 3, 4]}))
    res = assess_type1(b, "Fluency")
    a = next(r for r in res if r.system == "A")
    assert a.value is None and any("excluded" in c for c in a.caveats)
    qc = res[-1]
    assert qc.level == "qc"
    assert qc.value == pytest.approx((res[1].value + res[2].value) / 2)
    assert "A" in qc.caveats[0]


def test_type2_examples():
    same = parse_bundle(scores_doc({"x": [1, 2, 3], "y": [2, 3, 4], "z": [1.5, 2.5, 5]}))
    out = {r.measure: r.value for r in assess_type2(same, "Fluency")}
    assert out["spearman_rho"] == 1 and out["kendall_w"] == pytest.approx(1)
    assert set(out) == {"pearson_r", "spearman_rho", "kendall_w"}
    rev = parse_bundle(scores_doc({"x": [1, 2, 3], "y": [3, 2, 1]}))
    out = {r.measure: r.value for r in assess_type2(rev, "Fluency")}
    assert out["spearman_rho"] == pytest.approx(-1) and out["kendall_tau_b"] == pytest.approx(-1)
    tie = parse_bundle(scores_doc({"x": [1, 2, 3], "y": [1, 2, 2]}))
    out = {r.measure: r.value for r in assess_type2(tie, "Fluency")}
    assert round(out["spearman_rho"], 3) == 0.866 and round(out["kendall_tau_b"], 3) == 0.816


def test_type2_undefined_measure_is_reported_not_raised():
    b = parse_bundle(scores_doc({"x": [2, 2, 2], "y": [1, 2, 3]}))
    out = {r.measure: r for r in assess_type2(b, "Fluency")}
    assert out["pearson_r"].value is None
    assert out["pearson_r"].caveats[0].startswith("undefined")


def test_type3_identical_labels():
    b = parse_bundle(labels_doc({"a": ["ok", "bad", "ok"], "b": ["ok", "bad", "ok"]}))
    res = assess_type3(b, "Errors")
    assert res and all(r.value == 1.0 for r in res)
    assert {r.level for r in res} == {"system", "qc"}
    assert {r.measure for r in res} == {"cohen_kappa", "kripp_alpha"}
    fleiss = assess_type3(b, "Errors", AssessmentOptions(kappa="fleiss"))
    assert {r.measure for r in fleiss} == {"fleiss_kappa", "kripp_alpha"}


def test_type3_study_means_and_caveats():
    qc_results = [MeasureResult("kripp_alpha", "qc", 0.8, qc="q1"),
                  MeasureResult("kripp_alpha", "qc", 0.6, qc="q2")]
    (same,) = type3_study_means(qc_results, {"q1": ("a", "b"), "q2": ("b", "a")})
    assert same.value == pytest.approx(0.7)
    assert "label sets differ across QCs" not in same.caveats
    (diff,) = type3_study_means(qc_results, {"q1": ("a", "b"), "q2": ("x", "y")})
    assert diff.value == pytest.approx(0.7)
    assert "label sets differ across QCs" in diff.caveats


def test_type4_examples():
    b1 = load_bundle(DATA / "example1.yaml")
    res = {(r.level, r.qc): r.value for r in assess_type4(b1)}
    assert res[("qc", "Fluency")] == 1 and res[("study", None)] == 1
    b2 = load_bundle(DATA / "example2.yaml")
    res = assess_type4(b2)
    values = [r.value for r in res]
    assert values[0] == 0 and round(values[1], 3) == 0.667 and round(values[2], 3) == 0.333
    # equal comparison counts per criterion: pooling and averaging coincide
    assert not any("alternative" in c for c in res[-1].caveats)
    mean = assess_type4(b2, AssessmentOptions(p_aggregation="mean"))[-1]
    assert mean.value == pytest.approx((0 + 2 / 3) / 2)
    uneven = parse_bundle(scores_doc({"x": [1, 2, 3], "y": [3, 2, 1]}).replace(
        "study: s\nsystems: [A, B, C]\nexperiments:\n", "study: s\nsystems: [A, B, C]\nexperiments:\n"
        "  - {id: p, qc: Other, scale: {min: 0}, scores: {A: 1, B: 2}}\n"
        "  - {id: q, qc: Other, scale: {min: 0}, scores: {A: 1, B: 3}}\n"))
    res = assess_type4(uneven)
    assert res[-1].value == pytest.approx(1 / 4)
    assert "averaged alternative: 0.5000" in res[-1].caveats
    pair = parse_bundle(scores_doc({"x": [1, 2], "y": [3, 5]}, systems=("A", "B")))
    assert assess_type4(pair)[-1].value == 1.0


def test_findings_only_experiments_join_p():
    doc = ("study: f\nsystems: [A, B, C]\nexperiments:\n"
           "  - {id: published, qc: Q, findings: [[A, B, -1], [A, C, -1], [B, C, -1]]}\n"
           "  - {id: rerun, qc: Q, scale: {min: 0}, scores: {A: 1, B: 2, C: 3}}\n")
    a = assess_study(parse_bundle(doc), AssessmentOptions(mode=LENIENT))
    p = a.get("p_measure", "qc", "Q")
    assert p.value == 1.0 and "findings-only" in p.caveats[0]


def test_routing():
    scores = assess_study(load_bundle(DATA / "example1.yaml"))
    assert {r.result_type for r in scores.results} == {"I", "II", "IV"}
    labels = assess_study(parse_bundle(labels_doc({"a": ["ok", "bad"], "b": ["ok", "ok"]})))
    assert {r.result_type for r in labels.results} == {"III"}
    assert labels.get("kripp_alpha", "study") is not None


def test_example2_structure():
    a = assess_study(load_bundle(DATA / "example2.yaml"))
    assert len(a.qcs) == 2
    assert set(a.qc_level) == set(a.qcs)
    assert a.get("p_measure", "study").extras == {"matches": 2, "comparisons": 6}


def test_strict_gate_refuses_and_lenient_passes():
    general = {"x": {"test_dataset": "a"}, "y": {"test_dataset": "b"}}
    b = parse_bundle(scores_doc({"x": [1, 2, 3], "y": [1, 2, 4]}, general=general))
    with pytest.raises(GateRefusal) as info:
        assess_study(b)
    assert info.value.profile.different_keys == ("test_dataset",)
    a = assess_study(b, AssessmentOptions(mode=LENIENT))
    assert any("differences in outcome are expected" in c for c in a.caveats)


def test_invalid_bundle_is_rejected():
    b = parse_bundle(scores_doc({"x": [1, 2, 3], "y": [1, 2, 6]}))
    with pytest.raises(ValidationFailed) as info:
        assess_study(b)
    assert info.value.findings[0].message == "value outside scale"


def test_confidence_default_is_flagged():
    a = assess_study(good_bundle())
    assert "s* confidence intervals use the default 0.95 level" in a.caveats
    b = assess_study(good_bundle(), AssessmentOptions(confidence_level=0.9))
    assert b.confidence_level == 0.9 and not any("default 0.95" in c for c in b.caveats)


def test_native_flags_on_results():
    a = assess_study(load_bundle(DATA / "example2.yaml"))
    for r in a.results:
        expected = {"cv_star": "system", "p_measure": "study"}.get(r.measure, "qc")
        assert r.native == (r.level == expected)


@pytest.mark.parametrize("name", ["example1.yaml", "example2.yaml", "example3.yaml"])
def test_determinism(name):
    opts = AssessmentOptions(mode=LENIENT)
    first = to_canonical_json(assess_study(load_bundle(DATA / name), opts))
    second = to_canonical_json(assess_study(load_bundle(DATA / name), opts))
    assert first == second
