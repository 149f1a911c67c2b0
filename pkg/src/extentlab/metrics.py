"""Evaluation analytics: F1, agreement, breakdowns, and adversarial scoring.

All aggregations use plain proportions and population standard deviations;
every number here is recomputable by brute-force counting, which is exactly
how the test suite checks them.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .classifier import Classifier
from .corpus import (
    ROOT_HEAD,
    ArgumentSpan,
    CorpusError,
    LabelSet,
    RelationSample,
    Sentence,
    Token,
    align_char_span,
    canonicalize_sample,
)
from .extents import SemanticExtent

COARSE_LOCAL = "LOCAL"
COARSE_CONTEXT = "CONTEXT"
_COARSE_MAP = {"OA": COARSE_LOCAL, "AS": COARSE_LOCAL}

SENTENCE_LEVEL_CLASSES = frozenset({"Verbal", "Other"})


class MetricsError(ValueError):
    pass


def _mean_std(values) -> tuple[float, float]:
    arr = np.asarray(list(values), dtype=float)
    return float(arr.mean()), float(arr.std())  # population std


# ---------------------------------------------------------------------------
# F1
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EvalReport:
    per_label: dict
    micro_f1: float
    macro_f1: float
    confusion: dict

    def to_dict(self):
        return {
            "per_label": {l: dict(v) for l, v in self.per_label.items()},
            "micro_f1": self.micro_f1,
            "macro_f1": self.macro_f1,
            "confusion": {g: dict(p) for g, p in self.confusion.items()},
        }

    @classmethod
    def from_dict(cls, record):
        return cls(
            per_label={l: dict(v) for l, v in record["per_label"].items()},
            micro_f1=record["micro_f1"],
            macro_f1=record["macro_f1"],
            confusion={g: dict(p) for g, p in record["confusion"].items()},
        )

    def to_rows(self):
        header = ["label", "precision", "recall", "f1", "support"]
        rows = [
            [label, v["precision"], v["recall"], v["f1"], v["support"]]
            for label, v in self.per_label.items()
        ]
        return header, rows


def f1_scores(gold: Sequence[str], pred: Sequence[str], labels: LabelSet | Sequence[str]) -> EvalReport:
    """Multi-class micro/macro F1 with confusion counts.

    Micro-F1 equals accuracy in this single-label setting.  Macro-F1 averages
    over labels present in gold or predictions; labels that occur nowhere are
    reported but excluded from the mean.
    """
    if len(gold) != len(pred):
        raise MetricsError(f"gold and prediction lengths differ: {len(gold)} vs {len(pred)}")
    label_list = list(labels)
    known = set(label_list)
    stray = [l for l in list(gold) + list(pred) if l not in known]
    if stray:
        raise MetricsError(f"labels outside the label set: {sorted(set(stray))[:5]}")
    confusion: dict[str, dict[str, int]] = {}
    for g, p in zip(gold, pred):
        confusion.setdefault(g, {}).setdefault(p, 0)
        confusion[g][p] += 1
    per_label = {}
    macro_terms = []
    for label in label_list:
        tp = confusion.get(label, {}).get(label, 0)
        gold_count = sum(confusion.get(label, {}).values())
        pred_count = sum(row.get(label, 0) for row in confusion.values())
        precision = tp / pred_count if pred_count else 0.0
        recall = tp / gold_count if gold_count else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_label[label] = {"precision": precision, "recall": recall, "f1": f1, "support": gold_count}
        if gold_count or pred_count:
            macro_terms.append(f1)
    correct = sum(1 for g, p in zip(gold, pred) if g == p)
    micro = correct / len(gold) if gold else 0.0
    macro = sum(macro_terms) / len(macro_terms) if macro_terms else 0.0
    return EvalReport(per_label=per_label, micro_f1=micro, macro_f1=macro, confusion=confusion)


# ---------------------------------------------------------------------------
# Agreement
# ---------------------------------------------------------------------------


def _check_same_ids(a: Mapping, b: Mapping):
    if set(a) != set(b):
        only_a = sorted(set(a) - set(b))[:3]
        only_b = sorted(set(b) - set(a))[:3]
        raise MetricsError(f"sample ids differ between deciders (e.g. {only_a} vs {only_b})")
    if not a:
        raise MetricsError("no samples to compare")


def label_agreement(a: Mapping[str, str], b: Mapping[str, str]) -> float:
    """Fraction of samples with identical decisions; REJECT counts as a label."""
    _check_same_ids(a, b)
    return sum(1 for sid in a if a[sid] == b[sid]) / len(a)


def coarse_class(semantic_class: str) -> str:
    return _COARSE_MAP.get(semantic_class, COARSE_CONTEXT)


def semantic_class_agreement(a, b, granularity: str = "fine") -> float:
    """Agreement on semantic classes, either over all six or LOCAL vs CONTEXT."""
    if granularity not in ("fine", "coarse"):
        raise MetricsError(f"unknown granularity {granularity!r}")
    map_a = _class_map(a)
    map_b = _class_map(b)
    _check_same_ids(map_a, map_b)
    if granularity == "coarse":
        map_a = {sid: coarse_class(c) for sid, c in map_a.items()}
        map_b = {sid: coarse_class(c) for sid, c in map_b.items()}
    return sum(1 for sid in map_a if map_a[sid] == map_b[sid]) / len(map_a)


def _class_map(extents) -> dict[str, str]:
    if isinstance(extents, Mapping):
        return dict(extents)
    return {e.sample_id: e.semantic_class for e in extents}


@dataclass(frozen=True)
class SizeStats:
    mean: float
    std: float
    count: int

    def to_dict(self):
        return {"mean": self.mean, "std": self.std, "count": self.count}


def extent_size_stats(extents) -> SizeStats:
    """Mean and population standard deviation of extent token counts."""
    sizes = [len(e.tokens) for e in extents]
    if not sizes:
        raise MetricsError("no extents to measure")
    mean, std = _mean_std(sizes)
    return SizeStats(mean=mean, std=std, count=len(sizes))


@dataclass(frozen=True)
class AgreementReport:
    label_agreement: float
    sc_coarse: float
    sc_fine: float
    sizes: dict

    def to_dict(self):
        return {
            "label_agreement": self.label_agreement,
            "sc_coarse": self.sc_coarse,
            "sc_fine": self.sc_fine,
            "sizes": {d: s.to_dict() if isinstance(s, SizeStats) else dict(s) for d, s in self.sizes.items()},
        }

    @classmethod
    def from_dict(cls, record):
        return cls(
            label_agreement=record["label_agreement"],
            sc_coarse=record["sc_coarse"],
            sc_fine=record["sc_fine"],
            sizes={d: SizeStats(**s) for d, s in record["sizes"].items()},
        )

    def to_rows(self):
        header = ["metric", "value"]
        rows = [
            ["label_agreement", self.label_agreement],
            ["sc_coarse", self.sc_coarse],
            ["sc_fine", self.sc_fine],
        ]
        for decider, stats in self.sizes.items():
            rows.append([f"size_mean[{decider}]", stats.mean])
            rows.append([f"size_std[{decider}]", stats.std])
        return header, rows


def agreement_report(a: Sequence[SemanticExtent], b: Sequence[SemanticExtent]) -> AgreementReport:
    """Compare two deciders' extents: labels, semantic classes, extent sizes."""
    labels_a = {e.sample_id: e.predicted for e in a}
    labels_b = {e.sample_id: e.predicted for e in b}
    sizes: dict[str, SizeStats] = {}
    for extents in (a, b):
        for decider in sorted({e.decider_id for e in extents}):
            sizes[decider] = extent_size_stats([e for e in extents if e.decider_id == decider])
    return AgreementReport(
        label_agreement=label_agreement(labels_a, labels_b),
        sc_coarse=semantic_class_agreement(a, b, "coarse"),
        sc_fine=semantic_class_agreement(a, b, "fine"),
        sizes=sizes,
    )


# ---------------------------------------------------------------------------
# Confidence breakdown
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BreakdownRow:
    name: str
    count: int
    confidence_mean: float | None
    confidence_std: float | None
    micro_f1: float | None
    macro_f1: float | None

    def to_dict(self):
        return {
            "name": self.name,
            "count": self.count,
            "confidence_mean": self.confidence_mean,
            "confidence_std": self.confidence_std,
            "micro_f1": self.micro_f1,
            "macro_f1": self.macro_f1,
        }


@dataclass(frozen=True)
class BreakdownTable:
    rows: tuple

    def to_dict(self):
        return {"rows": [r.to_dict() for r in self.rows]}

    def row(self, name: str) -> BreakdownRow:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_rows(self):
        header = ["name", "count", "confidence_mean", "confidence_std", "micro_f1", "macro_f1"]
        return header, [
            [r.name, r.count, r.confidence_mean, r.confidence_std, r.micro_f1, r.macro_f1] for r in self.rows
        ]


def confidence_breakdown(
    extents: Mapping[str, SemanticExtent],
    predictions: Mapping,
    gold: Mapping[str, str],
    sentence_lengths: Mapping[str, int],
) -> BreakdownTable:
    """Performance and confidence per extent category.

    Rows partition the samples twice: by whether the decision stabilized on
    the arguments alone, and by whether the extent needed every token.
    Confidence and F1 refer to the full-sentence predictions.
    """
    ids = set(extents)
    for name, other in (("predictions", predictions), ("gold", gold), ("sentence_lengths", sentence_lengths)):
        if set(other) != ids:
            raise MetricsError(f"{name} ids do not align with extents")

    def make_row(name, members):
        members = sorted(members)
        if not members:
            return BreakdownRow(name, 0, None, None, None, None)
        confidences = [predictions[sid].confidence for sid in members]
        g = [gold[sid] for sid in members]
        p = [predictions[sid].predicted for sid in members]
        report = f1_scores(g, p, sorted(set(g) | set(p)))
        mean, std = _mean_std(confidences)
        return BreakdownRow(name, len(members), mean, std, report.micro_f1, report.macro_f1)

    only_args = {sid for sid in ids if extents[sid].semantic_class == "OA"}
    full_extent = {sid for sid in ids if len(extents[sid].tokens) == sentence_lengths[sid]}
    rows = (
        make_row("complete", ids),
        make_row("only_arguments", only_args),
        make_row("non_only_arguments", ids - only_args),
        make_row("all_tokens_in_extent", full_extent),
        make_row("not_all_tokens_in_extent", ids - full_extent),
    )
    return BreakdownTable(rows=rows)


# ---------------------------------------------------------------------------
# Class histograms
# ---------------------------------------------------------------------------

GROUP_LOCAL = "local"
GROUP_SENTENCE_LEVEL = "sentence_level"
GROUP_UNKNOWN = "UNKNOWN"


def sample_group(sample: RelationSample) -> str:
    if sample.syntactic_class is None:
        return GROUP_UNKNOWN
    return GROUP_SENTENCE_LEVEL if sample.syntactic_class in SENTENCE_LEVEL_CLASSES else GROUP_LOCAL


def class_histograms(extents, samples: Mapping[str, RelationSample], group: str | None = None) -> dict:
    """Semantic-class counts per sample group (local vs sentence-level)."""
    table: dict[str, dict[str, int]] = {}
    for extent in extents:
        sample = samples.get(extent.sample_id)
        if sample is None:
            raise MetricsError(f"extent {extent.sample_id!r} has no matching sample")
        g = sample_group(sample)
        hist = table.setdefault(g, {})
        hist[extent.semantic_class] = hist.get(extent.semantic_class, 0) + 1
    if group is not None:
        return {group: table.get(group, {})}
    return table


def histogram_csv(table: Mapping[str, Mapping[str, int]]) -> str:
    """Plot-ready CSV with one (class, count, group) row per histogram bar."""
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(["class", "count", "group"])
    for group in sorted(table):
        for cls in sorted(table[group]):
            writer.writerow([cls, table[group][cls], group])
    return buffer.getvalue()


# ---------------------------------------------------------------------------
# Adversarial evaluation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AdversarialGroup:
    group_id: str
    original: RelationSample
    variants: tuple

    def __post_init__(self):
        object.__setattr__(self, "variants", tuple(self.variants))


@dataclass(frozen=True)
class GroupResult:
    group_id: str
    accuracy: float
    n_variants: int

    def to_dict(self):
        return {"group_id": self.group_id, "accuracy": self.accuracy, "n_variants": self.n_variants}


@dataclass(frozen=True)
class AdversarialReport:
    groups: tuple
    accuracy_mean: float | None
    accuracy_std: float | None
    confidence_mean: float | None
    confidence_std: float | None
    rejected: tuple = ()

    def to_dict(self):
        return {
            "groups": [g.to_dict() for g in self.groups],
            "accuracy_mean": self.accuracy_mean,
            "accuracy_std": self.accuracy_std,
            "confidence_mean": self.confidence_mean,
            "confidence_std": self.confidence_std,
            "rejected": [dict(r) for r in self.rejected],
        }

    def to_rows(self):
        header = ["group_id", "accuracy", "n_variants"]
        return header, [[g.group_id, g.accuracy, g.n_variants] for g in self.groups]


def argument_surface(sample: RelationSample, which: str) -> str:
    span = sample.arg1 if which == "arg1" else sample.arg2
    tokens = sample.sentence.tokens
    return sample.sentence.text[tokens[span.start].char_start : tokens[span.end - 1].char_end]


def adversarial_eval(classifier: Classifier, groups: Sequence[AdversarialGroup]) -> AdversarialReport:
    """Score how often context rewrites flip the prediction.

    A variant counts as correct when its predicted label differs from the
    prediction on the group's original.  Accuracies aggregate per group
    first, then across groups; variant confidences pool over all variants.
    """
    results = []
    rejected = []
    confidences = []
    for group in groups:
        try:
            if not group.variants:
                raise MetricsError(f"group {group.group_id!r} has no variants")
            for which in ("arg1", "arg2"):
                original_text = argument_surface(group.original, which)
                for variant in group.variants:
                    variant_text = argument_surface(variant, which)
                    if variant_text != original_text:
                        raise MetricsError(
                            f"group {group.group_id!r}: variant {which} text {variant_text!r} "
                            f"differs from original {original_text!r}"
                        )
        except (MetricsError, CorpusError) as exc:
            rejected.append({"group_id": group.group_id, "error": str(exc)})
            continue
        original_pred = classifier.predict_subset(group.original, group.original.all_tokens)
        changed = 0
        for variant in group.variants:
            pred = classifier.predict_subset(variant, variant.all_tokens)
            confidences.append(pred.confidence)
            if pred.predicted != original_pred.predicted:
                changed += 1
        results.append(
            GroupResult(group_id=group.group_id, accuracy=changed / len(group.variants), n_variants=len(group.variants))
        )
    if results:
        acc_mean, acc_std = _mean_std([g.accuracy for g in results])
        conf_mean, conf_std = _mean_std(confidences)
    else:
        acc_mean = acc_std = conf_mean = conf_std = None
    return AdversarialReport(
        groups=tuple(results),
        accuracy_mean=acc_mean,
        accuracy_std=acc_std,
        confidence_mean=conf_mean,
        confidence_std=conf_std,
        rejected=tuple(rejected),
    )


def load_adversarial_groups(path) -> list[AdversarialGroup]:
    """Read adversarial groups from a JSON Lines file.

    Each line carries a group id, a role (original or variant), the sentence
    text with its tokens, and character spans for both arguments.  Variants
    are externally generated; no parse is expected, so a trivial dependency
    tree is attached.
    """
    by_group: dict[str, dict] = {}
    order: list[str] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MetricsError(f"line {line_number}: {exc.msg}") from exc
            for key in ("group_id", "role", "text", "arg1_char", "arg2_char", "tokens"):
                if key not in record:
                    raise MetricsError(f"line {line_number}: missing field {key!r}")
            group_id = record["group_id"]
            if group_id not in by_group:
                by_group[group_id] = {"original": None, "variants": []}
                order.append(group_id)
            entry = by_group[group_id]
            role = record["role"]
            index = len(entry["variants"])
            sample = _adversarial_sample(record, f"{group_id}.{role}{index if role == 'variant' else ''}")
            if role == "original":
                if entry["original"] is not None:
                    raise MetricsError(f"line {line_number}: group {group_id!r} has two originals")
                entry["original"] = sample
            elif role == "variant":
                entry["variants"].append(sample)
            else:
                raise MetricsError(f"line {line_number}: unknown role {role!r}")
    groups = []
    for group_id in order:
        entry = by_group[group_id]
        if entry["original"] is None:
            raise MetricsError(f"group {group_id!r} has no original")
        groups.append(AdversarialGroup(group_id=group_id, original=entry["original"], variants=tuple(entry["variants"])))
    return groups


def _adversarial_sample(record, sample_id) -> RelationSample:
    text = record["text"]
    tokens = []
    cursor = 0
    for i, word in enumerate(record["tokens"]):
        start = text.find(word, cursor)
        if start < 0:
            raise MetricsError(f"token {word!r} not found in text of {sample_id!r}")
        # trivial single-rooted tree: no parse accompanies adversarial text
        tokens.append(
            Token(
                index=i,
                text=word,
                char_start=start,
                char_end=start + len(word),
                pos="X",
                head=ROOT_HEAD if i == 0 else 0,
                deprel="root" if i == 0 else "dep",
            )
        )
        cursor = start + len(word)
    sentence = Sentence(doc_id=record["group_id"], sent_index=0, text=text, tokens=tuple(tokens))
    spans = []
    for key in ("arg1_char", "arg2_char"):
        s, e = record[key]
        start, end = align_char_span(sentence, s, e)
        spans.append({"start": start, "end": end})
    sample = RelationSample(
        sample_id=sample_id,
        sentence=sentence,
        arg1=ArgumentSpan(start=spans[0]["start"], end=spans[0]["end"]),
        arg2=ArgumentSpan(start=spans[1]["start"], end=spans[1]["end"]),
        label=record.get("intended_label"),
        genre="adversarial",
    )
    return canonicalize_sample(sample)


# ---------------------------------------------------------------------------
# Report emission
# ---------------------------------------------------------------------------


def emit_report(report, format: str = "structured", path=None) -> str:
    """Serialize a report deterministically as JSON or a delimited table."""
    if format == "structured":
        payload = report.to_dict() if hasattr(report, "to_dict") else report
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    elif format == "tabular":
        if not hasattr(report, "to_rows"):
            raise MetricsError(f"report of type {type(report).__name__} has no tabular form")
        header, rows = report.to_rows()
        buffer = io.StringIO()
        writer = csv.writer(buffer)
        writer.writerow(header)
        writer.writerows(rows)
        text = buffer.getvalue()
    else:
        raise MetricsError(f"unknown report format {format!r}")
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text
