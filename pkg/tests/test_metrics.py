import json
import math
import random

import pytest

import synth
from extentlab.classifier import KeywordClassifier, PredictionResult
from extentlab.corpus import LabelSet
from extentlab.extents import SemanticExtent
from extentlab.metrics import (
    AdversarialGroup,
    AgreementReport,
    EvalReport,
    MetricsError,
    adversarial_eval,
    agreement_report,
    argument_surface,
    class_histograms,
    coarse_class,
    confidence_breakdown,
    emit_report,
    extent_size_stats,
    f1_scores,
    histogram_csv,
    label_agreement,
    load_adversarial_groups,
    semantic_class_agreement,
)


def make_extent(sample_id, semantic_class, tokens=frozenset({0, 1}), predicted="X", decider="d", confidence=0.9):
    return SemanticExtent(
        sample_id=sample_id,
        decider_id=decider,
        tokens=frozenset(tokens),
        semantic_class=semantic_class,
        predicted=predicted,
        confidence=confidence,
        mode="expanding",
        threshold_met=True,
    )


# ---------------------------------------------------------------------------
# F1
# ---------------------------------------------------------------------------


def test_f1_all_correct():
    report = f1_scores(["A", "B"], ["A", "B"], ["A", "B"])
    assert report.micro_f1 == 1.0
    assert report.macro_f1 == 1.0


def test_f1_hand_computed_confusion():
    report = f1_scores(["A", "A", "B", "B"], ["A", "B", "B", "B"], ["A", "B"])
    assert report.micro_f1 == pytest.approx(0.75, abs=1e-9)
    assert report.per_label["A"]["f1"] == pytest.approx(2 / 3, abs=1e-9)
    assert report.per_label["B"]["f1"] == pytest.approx(4 / 5, abs=1e-9)
    assert report.macro_f1 == pytest.approx((2 / 3 + 4 / 5) / 2, abs=1e-9)
    assert report.confusion == {"A": {"A": 1, "B": 1}, "B": {"B": 2}}


def test_f1_absent_label_excluded_from_macro():
    report = f1_scores(["A", "A"], ["A", "A"], ["A", "B"])
    assert report.macro_f1 == 1.0
    assert report.per_label["B"]["support"] == 0


def test_f1_length_mismatch():
    with pytest.raises(MetricsError, match="lengths"):
        f1_scores(["A"], ["A", "B"], ["A", "B"])


def test_micro_f1_equals_accuracy(rng):
    labels = ["A", "B", "C"]
    for _ in range(20):
        n = rng.randint(1, 30)
        gold = [rng.choice(labels) for _ in range(n)]
        pred = [rng.choice(labels) for _ in range(n)]
        report = f1_scores(gold, pred, labels)
        accuracy = sum(g == p for g, p in zip(gold, pred)) / n
        assert report.micro_f1 == pytest.approx(accuracy, abs=1e-12)


# ---------------------------------------------------------------------------
# Agreement
# ---------------------------------------------------------------------------


def test_label_agreement_identical():
    decisions = {"s1": "A", "s2": "B"}
    assert label_agreement(decisions, dict(decisions)) == 1.0


def test_label_agreement_counts():
    a = {"s1": "A", "s2": "B", "s3": "REJECT", "s4": "A"}
    b = {"s1": "A", "s2": "B", "s3": "REJECT", "s4": "B"}
    assert label_agreement(a, b) == pytest.approx(0.75, abs=1e-9)


def test_label_agreement_disjoint_ids():
    with pytest.raises(MetricsError, match="ids differ"):
        label_agreement({"s1": "A"}, {"s2": "A"})


@pytest.mark.parametrize(
    "class_a,class_b,coarse_agree,fine_agree",
    [("OA", "AS", True, False), ("VOP", "BA", True, False), ("OA", "VOP", False, False), ("E", "E", True, True)],
)
def test_semantic_class_agreement_granularities(class_a, class_b, coarse_agree, fine_agree):
    a = {"s1": class_a}
    b = {"s1": class_b}
    assert semantic_class_agreement(a, b, "coarse") == (1.0 if coarse_agree else 0.0)
    assert semantic_class_agreement(a, b, "fine") == (1.0 if fine_agree else 0.0)


def test_coarse_mapping():
    assert coarse_class("OA") == "LOCAL"
    assert coarse_class("AS") == "LOCAL"
    for cls in ("VOP", "BA", "E", "A"):
        assert coarse_class(cls) == "CONTEXT"


def test_agreement_accepts_extent_lists():
    a = [make_extent("s1", "OA", predicted="X"), make_extent("s2", "AS", predicted="Y")]
    b = [make_extent("s1", "AS", predicted="X", decider="e"), make_extent("s2", "AS", predicted="Y", decider="e")]
    assert semantic_class_agreement(a, b, "coarse") == 1.0
    assert semantic_class_agreement(a, b, "fine") == 0.5


# ---------------------------------------------------------------------------
# Sizes
# ---------------------------------------------------------------------------


def test_extent_size_stats_hand_values():
    extents = [make_extent("s1", "OA", tokens={0, 1, 2}), make_extent("s2", "OA", tokens={0, 1, 2, 3, 4})]
    stats = extent_size_stats(extents)
    assert stats.mean == pytest.approx(4.0, abs=1e-9)
    assert stats.std == pytest.approx(1.0, abs=1e-9)


def test_extent_size_single_extent_has_zero_std():
    stats = extent_size_stats([make_extent("s1", "OA", tokens={0, 1})])
    assert stats.std == 0.0


def test_extent_size_matches_brute_force(rng):
    extents = [make_extent(f"s{i}", "OA", tokens=set(range(rng.randint(2, 9)))) for i in range(10)]
    stats = extent_size_stats(extents)
    sizes = [len(e.tokens) for e in extents]
    mean = sum(sizes) / len(sizes)
    variance = sum((s - mean) ** 2 for s in sizes) / len(sizes)
    assert stats.mean == pytest.approx(mean, abs=1e-12)
    assert stats.std == pytest.approx(math.sqrt(variance), abs=1e-12)


def test_extent_size_empty_errors():
    with pytest.raises(MetricsError):
        extent_size_stats([])


def test_agreement_report_shape():
    a = [make_extent("s1", "OA", tokens={0, 1}), make_extent("s2", "VOP", tokens={0, 1, 2})]
    b = [make_extent("s1", "OA", tokens={0, 1}, decider="h"), make_extent("s2", "BA", tokens={0, 1}, decider="h")]
    report = agreement_report(a, b)
    assert report.label_agreement == 1.0
    assert report.sc_fine == 0.5
    assert report.sc_coarse == 1.0
    assert report.sizes["d"].mean == pytest.approx(2.5)
    assert report.sizes["h"].mean == pytest.approx(2.0)


# ---------------------------------------------------------------------------
# Confidence breakdown
# ---------------------------------------------------------------------------


def prediction(label, confidence, other="Y"):
    return PredictionResult(
        distribution={label: confidence, other: 1.0 - confidence}, predicted=label, confidence=confidence
    )


def breakdown_fixture():
    """Six samples, hand-traced: two wrong (s3, s6); s3 and s4 need every token."""
    extents = {
        "s1": make_extent("s1", "OA", tokens={0, 1, 2}),
        "s2": make_extent("s2", "OA", tokens={0, 1, 2}),
        "s3": make_extent("s3", "VOP", tokens={0, 1, 2, 3}),
        "s4": make_extent("s4", "A", tokens={0, 1, 2, 3, 4}),
        "s5": make_extent("s5", "OA", tokens={0, 1}),
        "s6": make_extent("s6", "BA", tokens={0, 1, 2}),
    }
    predictions = {
        "s1": prediction("X", 0.9),
        "s2": prediction("X", 0.8),
        "s3": prediction("X", 0.6),
        "s4": prediction("X", 0.5),
        "s5": prediction("X", 1.0),
        "s6": prediction("X", 0.7),
    }
    gold = {"s1": "X", "s2": "X", "s3": "Y", "s4": "X", "s5": "X", "s6": "Y"}
    lengths = {"s1": 5, "s2": 6, "s3": 4, "s4": 5, "s5": 4, "s6": 6}
    return extents, predictions, gold, lengths


def test_breakdown_hand_computed_rows():
    table = confidence_breakdown(*breakdown_fixture())
    complete = table.row("complete")
    assert complete.count == 6
    assert complete.confidence_mean == pytest.approx(0.75, abs=1e-9)
    assert complete.confidence_std == pytest.approx(math.sqrt(0.175 / 6), abs=1e-9)
    assert complete.micro_f1 == pytest.approx(4 / 6, abs=1e-9)
    assert complete.macro_f1 == pytest.approx((0.8 + 0.0) / 2, abs=1e-9)

    only_args = table.row("only_arguments")
    assert only_args.count == 3
    assert only_args.confidence_mean == pytest.approx(0.9, abs=1e-9)
    assert only_args.micro_f1 == pytest.approx(1.0, abs=1e-9)
    assert only_args.macro_f1 == pytest.approx(1.0, abs=1e-9)

    non_oa = table.row("non_only_arguments")
    assert non_oa.count == 3
    assert non_oa.micro_f1 == pytest.approx(1 / 3, abs=1e-9)
    assert non_oa.macro_f1 == pytest.approx((0.5 + 0.0) / 2, abs=1e-9)

    full = table.row("all_tokens_in_extent")
    assert full.count == 2
    assert full.micro_f1 == pytest.approx(0.5, abs=1e-9)
    assert full.macro_f1 == pytest.approx((2 / 3 + 0.0) / 2, abs=1e-9)

    partial = table.row("not_all_tokens_in_extent")
    assert partial.count == 4
    assert partial.micro_f1 == pytest.approx(3 / 4, abs=1e-9)
    assert partial.macro_f1 == pytest.approx((6 / 7 + 0.0) / 2, abs=1e-9)


def test_breakdown_partitions_are_exhaustive_and_disjoint():
    table = confidence_breakdown(*breakdown_fixture())
    total = table.row("complete").count
    assert table.row("only_arguments").count + table.row("non_only_arguments").count == total
    assert table.row("all_tokens_in_extent").count + table.row("not_all_tokens_in_extent").count == total


def test_breakdown_degenerate_partition_matches_complete():
    extents, predictions, gold, lengths = breakdown_fixture()
    extents = {sid: make_extent(sid, "OA", tokens={0, 1}) for sid in extents}
    table = confidence_breakdown(extents, predictions, gold, lengths)
    assert table.row("only_arguments") == table.row("complete").__class__(
        "only_arguments",
        table.row("complete").count,
        table.row("complete").confidence_mean,
        table.row("complete").confidence_std,
        table.row("complete").micro_f1,
        table.row("complete").macro_f1,
    )
    empty = table.row("non_only_arguments")
    assert empty.count == 0
    assert empty.confidence_mean is None
    assert empty.micro_f1 is None


def test_breakdown_alignment_error():
    extents, predictions, gold, lengths = breakdown_fixture()
    del predictions["s1"]
    with pytest.raises(MetricsError, match="align"):
        confidence_breakdown(extents, predictions, gold, lengths)


# ---------------------------------------------------------------------------
# Class histograms
# ---------------------------------------------------------------------------


def histogram_samples():
    verbal = synth.employment_sample("s1")
    possessive = synth.RelationSample(
        sample_id="s2",
        sentence=verbal.sentence,
        arg1=verbal.arg1,
        arg2=verbal.arg2,
        label="Family",
        syntactic_class="Possessive",
    )
    unknown = synth.RelationSample(
        sample_id="s3", sentence=verbal.sentence, arg1=verbal.arg1, arg2=verbal.arg2, label="Family"
    )
    return {"s1": verbal, "s2": possessive, "s3": unknown}


def test_class_histograms_grouping():
    samples = histogram_samples()
    extents = [make_extent("s1", "VOP"), make_extent("s2", "OA"), make_extent("s3", "AS")]
    table = class_histograms(extents, samples)
    assert table == {"sentence_level": {"VOP": 1}, "local": {"OA": 1}, "UNKNOWN": {"AS": 1}}


def test_class_histograms_filter_group():
    samples = histogram_samples()
    extents = [make_extent("s1", "VOP"), make_extent("s2", "OA")]
    assert class_histograms(extents, samples, group="sentence_level") == {"sentence_level": {"VOP": 1}}


def test_histogram_csv_rows():
    text = histogram_csv({"local": {"OA": 2}, "sentence_level": {"VOP": 1}})
    lines = text.strip().splitlines()
    assert lines[0] == "class,count,group"
    assert "OA,2,local" in lines
    assert "VOP,1,sentence_level" in lines


# ---------------------------------------------------------------------------
# Adversarial
# ---------------------------------------------------------------------------

ADV_LABELS = LabelSet(("Employer", "Family", "Located"))


def adversarial_classifier():
    # two synonyms per label make non-flipping variants constructible
    return KeywordClassifier(
        ADV_LABELS,
        rules={
            "hires": ("Employer", 0.9),
            "employs": ("Employer", 0.9),
            "marries": ("Family", 0.9),
            "weds": ("Family", 0.9),
            "visits": ("Located", 0.9),
            "tours": ("Located", 0.9),
        },
        fallback_label="Employer",
        fallback_confidence=0.5,
    )


def group_records(group_id, original_verb, variant_verbs):
    def record(role, verb):
        text = f"ana {verb} acme"
        return {
            "group_id": group_id,
            "role": role,
            "text": text,
            "tokens": text.split(),
            "arg1_char": [0, 3],
            "arg2_char": [len(text) - 4, len(text)],
        }

    return [record("original", original_verb)] + [record("variant", v) for v in variant_verbs]


def write_groups(tmp_path, records):
    path = tmp_path / "groups.jsonl"
    path.write_text("".join(json.dumps(r) + "\n" for r in records))
    return path


def test_adversarial_group_accuracy_counts(tmp_path):
    # 2 of 4 variants change the label: synonyms keep it, other labels flip it
    records = group_records("g0", "hires", ["employs", "hires", "marries", "visits"])
    groups = load_adversarial_groups(write_groups(tmp_path, records))
    report = adversarial_eval(adversarial_classifier(), groups)
    assert report.groups[0].accuracy == pytest.approx(0.5, abs=1e-9)


def test_adversarial_all_variants_change(tmp_path):
    records = group_records("g0", "hires", ["marries", "visits", "weds"])
    groups = load_adversarial_groups(write_groups(tmp_path, records))
    report = adversarial_eval(adversarial_classifier(), groups)
    assert report.groups[0].accuracy == 1.0


def test_adversarial_twelve_groups_hand_aggregation(tmp_path):
    flips = [4, 2, 0, 1, 3, 4, 2, 1, 0, 4, 3, 2]  # flipped variants out of 4
    records = []
    for g, n_flip in enumerate(flips):
        variants = ["marries"] * n_flip + ["employs"] * (4 - n_flip)
        records.extend(group_records(f"g{g}", "hires", variants))
    groups = load_adversarial_groups(write_groups(tmp_path, records))
    report = adversarial_eval(adversarial_classifier(), groups)
    accuracies = [n / 4 for n in flips]
    mean = sum(accuracies) / len(accuracies)
    variance = sum((a - mean) ** 2 for a in accuracies) / len(accuracies)
    assert report.accuracy_mean == pytest.approx(mean, abs=1e-9)
    assert report.accuracy_std == pytest.approx(math.sqrt(variance), abs=1e-9)
    # every variant hits a 0.9-confidence rule
    assert report.confidence_mean == pytest.approx(0.9, abs=1e-9)
    assert report.confidence_std == pytest.approx(0.0, abs=1e-9)


def test_adversarial_rejects_changed_argument_text(tmp_path):
    records = group_records("g0", "hires", ["marries"])
    records.append(
        {
            "group_id": "g0",
            "role": "variant",
            "text": "bob visits acme",
            "tokens": ["bob", "visits", "acme"],
            "arg1_char": [0, 3],
            "arg2_char": [11, 15],
        }
    )
    groups = load_adversarial_groups(write_groups(tmp_path, records))
    report = adversarial_eval(adversarial_classifier(), groups)
    assert report.groups == ()
    assert len(report.rejected) == 1
    assert "differs" in report.rejected[0]["error"]


def test_adversarial_surface_uses_aligned_span(tmp_path):
    records = group_records("g0", "hires", ["marries"])
    groups = load_adversarial_groups(write_groups(tmp_path, records))
    assert argument_surface(groups[0].original, "arg1") == "ana"
    assert argument_surface(groups[0].original, "arg2") == "acme"


def test_adversarial_loader_validates(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text(json.dumps({"group_id": "g", "role": "original"}) + "\n")
    with pytest.raises(MetricsError, match="missing field"):
        load_adversarial_groups(path)


# ---------------------------------------------------------------------------
# Report emission
# ---------------------------------------------------------------------------


def test_emit_structured_roundtrip(tmp_path):
    report = f1_scores(["A", "B"], ["A", "A"], ["A", "B"])
    text = emit_report(report, "structured", tmp_path / "report.json")
    assert json.loads(text) == report.to_dict()
    assert EvalReport.from_dict(json.loads((tmp_path / "report.json").read_text())) == report


def test_emit_tabular_one_row_per_label():
    report = f1_scores(["A", "B"], ["A", "A"], ["A", "B"])
    lines = emit_report(report, "tabular").strip().splitlines()
    assert len(lines) == 1 + 2


def test_emit_unknown_format():
    report = f1_scores(["A"], ["A"], ["A"])
    with pytest.raises(MetricsError, match="format"):
        emit_report(report, "yaml")


def test_agreement_report_roundtrip():
    a = [make_extent("s1", "OA", tokens={0, 1})]
    b = [make_extent("s1", "AS", tokens={0, 1, 2}, decider="h")]
    report = agreement_report(a, b)
    assert AgreementReport.from_dict(json.loads(emit_report(report, "structured"))) == report
