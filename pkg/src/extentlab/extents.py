"""Expanding and reductive semantic extents for any decider behind the contract.

The expanding procedure grows a candidate from the arguments along the
priority order until the decider reproduces its full-sentence label with
confidence above the threshold.  The reductive procedure runs a beam search
that removes low-influence tokens while the prediction stays constant, using
gradient saliency when the decider has it and occlusion scoring otherwise.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .classifier import CapabilityError, Classifier, ClassifierError, cross_entropy
from .corpus import CorpusError, RelationSample
from .syntax import STAGE_RANK, STAGES, PriorityAssignment

EXTENT_MODES = ("expanding", "reductive", "human")


@dataclass(frozen=True)
class ExtentConfig:
    theta: float = 0.5
    beam_width: int = 3
    max_steps: int | None = None  # None = sentence length
    occlusion_fallback: bool = True

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError(f"theta must lie in [0, 1], got {self.theta}")
        if self.beam_width < 1:
            raise ValueError(f"beam width must be >= 1, got {self.beam_width}")
        if self.max_steps is not None and self.max_steps < 1:
            raise ValueError(f"max steps must be >= 1, got {self.max_steps}")


@dataclass(frozen=True)
class SemanticExtent:
    sample_id: str
    decider_id: str
    tokens: frozenset[int]
    semantic_class: str
    predicted: str
    confidence: float
    mode: str
    threshold_met: bool
    scorer: str | None = None  # gradient | occlusion, reductive mode only

    def to_record(self) -> dict:
        record = {
            "sample_id": self.sample_id,
            "decider_id": self.decider_id,
            "mode": self.mode,
            "tokens": sorted(self.tokens),
            "semantic_class": self.semantic_class,
            "predicted": self.predicted,
            "confidence": self.confidence,
            "threshold_met": self.threshold_met,
        }
        if self.scorer is not None:
            record["scorer"] = self.scorer
        return record

    @classmethod
    def from_record(cls, record) -> "SemanticExtent":
        return cls(
            sample_id=record["sample_id"],
            decider_id=record["decider_id"],
            tokens=frozenset(record["tokens"]),
            semantic_class=record["semantic_class"],
            predicted=record["predicted"],
            confidence=float(record["confidence"]),
            mode=record["mode"],
            threshold_met=bool(record["threshold_met"]),
            scorer=record.get("scorer"),
        )


@dataclass(frozen=True)
class ExtentFailure:
    sample_id: str
    error: str

    def to_record(self):
        return {"sample_id": self.sample_id, "error": self.error}


def extent_class(assignment: PriorityAssignment, tokens, argument_tokens) -> str:
    """The maximum stage among included non-argument tokens, OA when none."""
    added = set(tokens) - set(argument_tokens)
    if not added:
        return "OA"
    return STAGES[max(STAGE_RANK[assignment.stage_of(i)] for i in added)]


def expanding_extent(
    classifier: Classifier,
    sample: RelationSample,
    assignment: PriorityAssignment,
    config: ExtentConfig = ExtentConfig(),
) -> SemanticExtent:
    """Grow the candidate along the priority order until the decision stabilizes.

    Each candidate (the initial arguments-only one included) is evaluated;
    the walk stops at the first whose label equals the full-sentence label
    with confidence above theta.  An exhausted order returns the full
    sentence with ``threshold_met`` reflecting the final check.
    """
    full_result = classifier.predict_subset(sample, sample.all_tokens)
    candidate = set(sample.argument_tokens)
    order = assignment.expansion_order
    last_added = None
    position = 0
    while True:
        result = classifier.predict_subset(sample, candidate)
        met = result.predicted == full_result.predicted and result.confidence > config.theta
        if met or position >= len(order):
            return SemanticExtent(
                sample_id=sample.sample_id,
                decider_id=classifier.decider_id,
                tokens=frozenset(candidate),
                semantic_class="OA" if last_added is None else assignment.stage_of(last_added),
                predicted=result.predicted,
                confidence=result.confidence,
                mode="expanding",
                threshold_met=met,
            )
        last_added = order[position]
        candidate.add(last_added)
        position += 1


def occlusion_scores(classifier: Classifier, sample: RelationSample, visible, reference: str) -> dict[int, float]:
    """Influence fallback for gradient-free deciders.

    A token scores the absolute change of the reference-label loss when it is
    hidden; argument tokens, which may never be hidden, are skipped.
    """
    visible = frozenset(visible)
    ref_index = classifier.label_set.index(reference)
    base = classifier.predict_subset(sample, visible)
    base_loss = cross_entropy([base.distribution[l] for l in classifier.label_set], ref_index)
    scores: dict[int, float] = {}
    for index in sorted(visible - sample.argument_tokens):
        reduced = classifier.predict_subset(sample, visible - {index})
        loss = cross_entropy([reduced.distribution[l] for l in classifier.label_set], ref_index)
        scores[index] = abs(loss - base_loss)
    return scores


def reductive_extent(
    classifier: Classifier,
    sample: RelationSample,
    assignment: PriorityAssignment,
    config: ExtentConfig = ExtentConfig(),
) -> SemanticExtent:
    """Beam-search removal of tokens while the prediction stays constant.

    Per candidate, removable tokens are ranked by ascending influence
    (recomputed on that candidate) and the ``beam_width`` least influential
    removals are attempted; label-preserving results survive, pruned to the
    ``beam_width`` smallest.  The smallest final candidate wins, ties broken
    by the lexicographically smallest index set.
    """
    if not classifier.supports_gradients and not config.occlusion_fallback:
        raise CapabilityError(
            f"decider {classifier.decider_id!r} has no gradient support and the occlusion fallback is disabled"
        )
    full = frozenset(sample.all_tokens)
    arguments = sample.argument_tokens
    full_result = classifier.predict_subset(sample, full)
    reference = full_result.predicted
    max_steps = len(sample.sentence) if config.max_steps is None else config.max_steps

    if classifier.supports_gradients:
        scorer = "gradient"

        def influence(cand):
            return classifier.saliency(sample, cand, reference)

    else:
        scorer = "occlusion"

        def influence(cand):
            return occlusion_scores(classifier, sample, cand, reference)

    def rank_key(cand):
        return (len(cand), tuple(sorted(cand)))

    predictions = {full: full_result}

    def predict(cand):
        if cand not in predictions:
            predictions[cand] = classifier.predict_subset(sample, cand)
        return predictions[cand]

    beam = [full]
    finished: list[frozenset[int]] = []
    for _ in range(max_steps):
        layer: set[frozenset[int]] = set()
        for cand in beam:
            removable = sorted(cand - arguments)
            if not removable:
                finished.append(cand)
                continue
            scores = influence(cand)
            ranked = sorted(removable, key=lambda i: (scores.get(i, 0.0), i))
            survived = False
            for index in ranked[: config.beam_width]:
                reduced = cand - {index}
                if predict(reduced).predicted == reference:
                    layer.add(reduced)
                    survived = True
            if not survived:
                finished.append(cand)
        if not layer:
            beam = []
            break
        beam = sorted(layer, key=rank_key)[: config.beam_width]
    finished.extend(beam)
    best = min(finished, key=rank_key)
    result = predict(best)
    return SemanticExtent(
        sample_id=sample.sample_id,
        decider_id=classifier.decider_id,
        tokens=best,
        semantic_class=extent_class(assignment, best, arguments),
        predicted=result.predicted,
        confidence=result.confidence,
        mode="reductive",
        threshold_met=True,
        scorer=scorer,
    )


def extent_batch(classifier, samples, pa_map, config=ExtentConfig(), mode="expanding"):
    """Per-sample extents; failures become records instead of aborting the run."""
    if mode not in ("expanding", "reductive"):
        raise ValueError(f"unknown extent mode {mode!r}")
    compute = expanding_extent if mode == "expanding" else reductive_extent
    results = []
    for sample in samples:
        try:
            results.append(compute(classifier, sample, pa_map[sample.sample_id], config))
        except (ClassifierError, CorpusError, KeyError) as exc:
            results.append(ExtentFailure(sample_id=sample.sample_id, error=str(exc)))
    return results


def save_extents(results, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for item in results:
            fh.write(json.dumps(item.to_record(), sort_keys=True))
            fh.write("\n")


def load_extents(path) -> list[SemanticExtent]:
    """Read an extent file; failure records written by batch runs are skipped."""
    extents = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            record = json.loads(line)
            if "error" in record:
                continue
            extents.append(SemanticExtent.from_record(record))
    return extents
