import random

import pytest

import synth
from extentlab.classifier import CapabilityError, ClassifierError, KeywordClassifier, LinearBagOfWordsClassifier
from extentlab.corpus import LabelSet
from extentlab.extents import (
    ExtentConfig,
    ExtentFailure,
    SemanticExtent,
    expanding_extent,
    extent_batch,
    extent_class,
    load_extents,
    occlusion_scores,
    reductive_extent,
    save_extents,
)
from extentlab.syntax import stage_assignment


def token_words(sample, extent):
    return sorted(sample.sentence.tokens[i].text for i in extent.tokens)


def brute_force_minimum(classifier, sample):
    """Exhaustive search for the smallest label-preserving superset of the arguments."""
    full_label = classifier.predict_subset(sample, sample.all_tokens).predicted
    args = sample.argument_tokens
    rest = sorted(sample.all_tokens - args)
    best = None
    for mask in range(2 ** len(rest)):
        subset = frozenset(args | {rest[i] for i in range(len(rest)) if mask >> i & 1})
        if classifier.predict_subset(sample, subset).predicted == full_label:
            key = (len(subset), tuple(sorted(subset)))
            if best is None or key < best[0]:
                best = (key, subset)
    return best[1]


# ---------------------------------------------------------------------------
# Expanding
# ---------------------------------------------------------------------------


def test_expanding_worked_example_stops_at_verb(employment, employment_keyword):
    extent = expanding_extent(employment_keyword, employment, stage_assignment(employment), ExtentConfig(theta=0.5))
    assert token_words(employment, extent) == ["Entertainment", "He", "NBC", "at", "worked"]
    assert extent.semantic_class == "VOP"
    assert extent.predicted == "Employer"
    assert extent.threshold_met
    assert extent.mode == "expanding"


def test_expanding_stops_at_arguments_when_they_suffice(employment):
    classifier = KeywordClassifier(
        LabelSet(("Employer", "Family", "Located")),
        rules={"He": ("Family", 0.9)},
        fallback_label="Located",
    )
    extent = expanding_extent(classifier, employment, stage_assignment(employment))
    assert extent.tokens == employment.argument_tokens
    assert extent.semantic_class == "OA"


def test_expanding_unreachable_threshold_returns_full_sentence(employment, employment_keyword):
    extent = expanding_extent(employment_keyword, employment, stage_assignment(employment), ExtentConfig(theta=1.0))
    assert extent.tokens == employment.all_tokens
    assert extent.semantic_class == "A"
    assert not extent.threshold_met


def test_expanding_candidate_grows_by_one_token(employment, employment_keyword):
    # instrument the classifier to watch the evaluated candidates
    seen = []
    original = employment_keyword.predict_subset

    def spy(sample, visible):
        seen.append(frozenset(visible))
        return original(sample, visible)

    employment_keyword.predict_subset = spy
    expanding_extent(employment_keyword, employment, stage_assignment(employment), ExtentConfig(theta=0.5))
    employment_keyword.predict_subset = original
    candidates = seen[1:]  # first call is the full-sentence prediction
    assert candidates[0] == employment.argument_tokens
    for earlier, later in zip(candidates, candidates[1:]):
        assert earlier < later
        assert len(later) == len(earlier) + 1


def test_expanding_matches_independent_walk(rng):
    """Oracle: re-walk the expansion order applying the stopping rule by hand."""
    for _ in range(40):
        sample = synth.random_sample(rng)
        classifier = synth.random_keyword_classifier(rng)
        theta = rng.choice([0.3, 0.5, 0.7])
        assignment = stage_assignment(sample)
        extent = expanding_extent(classifier, sample, assignment, ExtentConfig(theta=theta))

        full_label = classifier.predict_subset(sample, sample.all_tokens).predicted
        visible = set(sample.argument_tokens)
        added = []
        met = False
        for step in range(len(assignment.expansion_order) + 1):
            result = classifier.predict_subset(sample, visible)
            if result.predicted == full_label and result.confidence > theta:
                met = True
                break
            if step < len(assignment.expansion_order):
                token = assignment.expansion_order[step]
                visible.add(token)
                added.append(token)
        assert extent.tokens == frozenset(visible)
        assert extent.threshold_met == met
        expected_class = "OA" if not added else assignment.stage_of(added[-1])
        assert extent.semantic_class == expected_class


def test_expanding_is_deterministic(employment, employment_keyword):
    a = expanding_extent(employment_keyword, employment, stage_assignment(employment))
    b = expanding_extent(employment_keyword, employment, stage_assignment(employment))
    assert a == b


def test_expanding_stop_rule_holds_and_previous_candidate_failed(rng):
    # re-evaluate the returned extent and the candidate one step earlier
    for _ in range(30):
        sample = synth.random_sample(rng)
        classifier = synth.random_keyword_classifier(rng)
        theta = rng.choice([0.3, 0.5, 0.7])
        assignment = stage_assignment(sample)
        extent = expanding_extent(classifier, sample, assignment, ExtentConfig(theta=theta))
        full_label = classifier.predict_subset(sample, sample.all_tokens).predicted
        if extent.threshold_met:
            result = classifier.predict_subset(sample, extent.tokens)
            assert result.predicted == full_label and result.confidence > theta
        added = [t for t in assignment.expansion_order if t in extent.tokens]
        if added:
            previous = extent.tokens - {added[-1]}
            result = classifier.predict_subset(sample, previous)
            assert not (result.predicted == full_label and result.confidence > theta)


# ---------------------------------------------------------------------------
# Reductive
# ---------------------------------------------------------------------------


def test_reductive_worked_example_keeps_only_the_verb(employment, employment_linear):
    extent = reductive_extent(employment_linear, employment, stage_assignment(employment), ExtentConfig(beam_width=8))
    assert extent.tokens == employment.argument_tokens | {3}
    assert extent.semantic_class == "VOP"
    assert extent.scorer == "gradient"
    assert extent.tokens == brute_force_minimum(employment_linear, employment)


def test_reductive_constant_model_keeps_arguments_only(employment):
    constant = LinearBagOfWordsClassifier(
        LabelSet(("Employer", "Other")), vocab={"worked": 0}, weights=[[0.0], [0.0]], bias=[1.0, 0.0]
    )
    extent = reductive_extent(constant, employment, stage_assignment(employment))
    assert extent.tokens == employment.argument_tokens
    assert extent.semantic_class == "OA"


def test_reductive_fragile_model_keeps_everything(employment):
    # every non-argument token supports the decision; removing any one flips it
    non_arg_words = ["had", "previously", "worked", "at", "."]
    vocab = {w: i for i, w in enumerate(non_arg_words)}
    weights = [[1.0] * len(non_arg_words), [0.0] * len(non_arg_words)]
    fragile = LinearBagOfWordsClassifier(
        LabelSet(("Supported", "Broken")), vocab=vocab, weights=weights, bias=[0.0, len(non_arg_words) - 0.5]
    )
    extent = reductive_extent(fragile, employment, stage_assignment(employment), ExtentConfig(beam_width=8))
    assert extent.tokens == employment.all_tokens
    # exhaustive check: each single removal indeed changes the label
    full_label = fragile.predict_subset(employment, employment.all_tokens).predicted
    for index in employment.all_tokens - employment.argument_tokens:
        reduced = fragile.predict_subset(employment, employment.all_tokens - {index})
        assert reduced.predicted != full_label


def test_reductive_preserves_label_and_matches_brute_force(rng):
    for _ in range(25):
        sample = synth.random_sample(rng, n=rng.randint(4, 9))
        classifier = synth.random_keyword_classifier(rng)
        config = ExtentConfig(beam_width=len(sample.sentence))
        extent = reductive_extent(classifier, sample, stage_assignment(sample), config)
        full = classifier.predict_subset(sample, sample.all_tokens)
        assert classifier.predict_subset(sample, extent.tokens).predicted == full.predicted
        assert len(extent.tokens) == len(brute_force_minimum(classifier, sample))


def test_reductive_occlusion_fallback_flagged(employment, employment_keyword):
    extent = reductive_extent(employment_keyword, employment, stage_assignment(employment), ExtentConfig(beam_width=8))
    assert extent.scorer == "occlusion"
    assert extent.threshold_met


def test_reductive_capability_error_without_fallback(employment, employment_keyword):
    config = ExtentConfig(occlusion_fallback=False)
    with pytest.raises(CapabilityError):
        reductive_extent(employment_keyword, employment, stage_assignment(employment), config)


def test_occlusion_scores_cover_removable_tokens(employment, employment_keyword):
    scores = occlusion_scores(employment_keyword, employment, employment.all_tokens, "Employer")
    assert set(scores) == set(employment.all_tokens - employment.argument_tokens)
    assert all(v >= 0 for v in scores.values())
    # hiding the decisive keyword moves the loss most
    assert max(scores, key=scores.get) == 3


# ---------------------------------------------------------------------------
# Batch and serialization
# ---------------------------------------------------------------------------


class ExplodingClassifier(KeywordClassifier):
    def __init__(self, inner, bad_sample_id):
        super().__init__(inner.label_set, inner.rules, inner.fallback_label, inner.fallback_confidence)
        self.bad_sample_id = bad_sample_id

    def predict_subset(self, sample, visible):
        if sample.sample_id == self.bad_sample_id:
            raise ClassifierError("injected failure")
        return super().predict_subset(sample, visible)


def test_extent_batch_records_failures(rng):
    samples = [synth.random_sample(rng, sample_id=f"b{i}") for i in range(3)]
    classifier = ExplodingClassifier(synth.random_keyword_classifier(rng), "b1")
    pa_map = {s.sample_id: stage_assignment(s) for s in samples}
    results = extent_batch(classifier, samples, pa_map, ExtentConfig(), mode="expanding")
    assert len(results) == 3
    assert isinstance(results[0], SemanticExtent)
    assert isinstance(results[1], ExtentFailure)
    assert "injected failure" in results[1].error
    assert isinstance(results[2], SemanticExtent)


def test_extent_batch_empty():
    classifier = synth.employment_keyword_classifier()
    assert extent_batch(classifier, [], {}, ExtentConfig(), mode="expanding") == []


def test_extent_batch_equals_itemwise_calls(rng):
    samples = [synth.random_sample(rng, sample_id=f"c{i}") for i in range(6)]
    classifier = synth.random_keyword_classifier(rng)
    pa_map = {s.sample_id: stage_assignment(s) for s in samples}
    batched = extent_batch(classifier, samples, pa_map, ExtentConfig(), mode="expanding")
    itemwise = [expanding_extent(classifier, s, pa_map[s.sample_id], ExtentConfig()) for s in samples]
    assert batched == itemwise


def test_every_extent_contains_arguments(rng):
    for mode in ("expanding", "reductive"):
        for _ in range(10):
            sample = synth.random_sample(rng)
            classifier = synth.random_keyword_classifier(rng)
            results = extent_batch(
                classifier, [sample], {sample.sample_id: stage_assignment(sample)}, ExtentConfig(), mode=mode
            )
            assert sample.argument_tokens <= results[0].tokens


def test_extent_file_roundtrip(tmp_path, employment, employment_keyword):
    extent = expanding_extent(employment_keyword, employment, stage_assignment(employment))
    failure = ExtentFailure(sample_id="gone", error="boom")
    path = tmp_path / "extents.jsonl"
    save_extents([extent, failure], path)
    loaded = load_extents(path)
    assert loaded == [extent]


def test_extent_class_helper(employment):
    assignment = stage_assignment(employment)
    assert extent_class(assignment, employment.argument_tokens, employment.argument_tokens) == "OA"
    assert extent_class(assignment, employment.argument_tokens | {4}, employment.argument_tokens) == "AS"
    assert extent_class(assignment, employment.argument_tokens | {4, 3}, employment.argument_tokens) == "VOP"
    assert extent_class(assignment, employment.all_tokens, employment.argument_tokens) == "A"


def test_extent_config_validation():
    with pytest.raises(ValueError):
        ExtentConfig(theta=1.5)
    with pytest.raises(ValueError):
        ExtentConfig(beam_width=0)
    with pytest.raises(ValueError):
        ExtentConfig(max_steps=0)
