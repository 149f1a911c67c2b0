"""The pluggable decider contract plus desk-scale reference implementations.

A decider sees a sample through :func:`encode_sample`: the visible tokens in
sentence order with explicit boundary markers around each argument span,
hidden tokens omitted entirely.  Everything downstream (extents, metrics,
annotation preselection) talks to deciders only through this contract, so
heavyweight encoders can plug in behind it unchanged.

Two reference deciders are provided:

* :class:`KeywordClassifier` -- a fixed rule table, not trainable and without
  gradients; the workhorse for oracle tests.
* :class:`LinearBagOfWordsClassifier` -- a trainable linear model over token
  counts with an analytic per-token gradient, so saliency can be checked
  against finite differences.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
import json
import os

import numpy as np

from .corpus import LabelSet, RelationSample

CONTRACT_VERSION = "1"

ARG1_OPEN = "[A1]"
ARG1_CLOSE = "[/A1]"
ARG2_OPEN = "[A2]"
ARG2_CLOSE = "[/A2]"
MARKER_TOKENS = (ARG1_OPEN, ARG1_CLOSE, ARG2_OPEN, ARG2_CLOSE)

PROBABILITY_FLOOR = 1e-12


class ClassifierError(ValueError):
    pass


class ContractViolation(ClassifierError):
    """A caller broke a precondition, e.g. hid an argument token."""


class CapabilityError(ClassifierError):
    """The decider does not support the requested operation."""


class TrainingError(ClassifierError):
    pass


@dataclass(frozen=True)
class EncodedSample:
    """Visible tokens with argument markers and the back-mapping to the sentence.

    ``source_indices[i]`` is the sentence token index behind position ``i``,
    or ``None`` at marker positions.
    """

    tokens: tuple[str, ...]
    source_indices: tuple[int | None, ...]

    def content_positions(self):
        return [p for p, src in enumerate(self.source_indices) if src is not None]


@dataclass(frozen=True)
class PredictionResult:
    distribution: dict[str, float]
    predicted: str
    confidence: float


def encode_sample(sample: RelationSample, visible) -> EncodedSample:
    """Lay out the visible tokens in sentence order with argument markers.

    Hidden tokens are omitted, not masked in place.  Both argument spans must
    be fully visible.
    """
    visible = frozenset(visible)
    n = len(sample.sentence)
    out_of_range = [i for i in visible if not 0 <= i < n]
    if out_of_range:
        raise ContractViolation(f"visible indices out of range: {sorted(out_of_range)}")
    missing = sample.argument_tokens - visible
    if missing:
        raise ContractViolation(f"argument tokens hidden from the decider: {sorted(missing)}")
    opens = {sample.arg1.start: ARG1_OPEN, sample.arg2.start: ARG2_OPEN}
    closes = {sample.arg1.end - 1: ARG1_CLOSE, sample.arg2.end - 1: ARG2_CLOSE}
    tokens: list[str] = []
    sources: list[int | None] = []
    for i in sorted(visible):
        if i in opens:
            tokens.append(opens[i])
            sources.append(None)
        tokens.append(sample.sentence.tokens[i].text)
        sources.append(i)
        if i in closes:
            tokens.append(closes[i])
            sources.append(None)
    return EncodedSample(tokens=tuple(tokens), source_indices=tuple(sources))


def softmax(logits) -> np.ndarray:
    """Stable softmax: exponentials are taken after max subtraction."""
    h = np.asarray(logits, dtype=float)
    if not np.all(np.isfinite(h)):
        raise ClassifierError("softmax requires finite logits")
    shifted = h - h.max()
    exp = np.exp(shifted)
    return exp / exp.sum()


def cross_entropy(dist, gold_index: int) -> float:
    """Negative log probability of the gold label, floored at 1e-12."""
    p = float(np.asarray(dist, dtype=float)[gold_index])
    return -float(np.log(max(p, PROBABILITY_FLOOR)))


def prediction_from_probs(label_set: LabelSet, probs) -> PredictionResult:
    probs = np.asarray(probs, dtype=float)
    total = probs.sum()
    if probs.shape != (len(label_set),) or np.any(probs < 0) or abs(total - 1.0) > 1e-6:
        raise ClassifierError("invalid probability distribution")
    best = int(np.argmax(probs))  # argmax ties break toward the lowest index
    return PredictionResult(
        distribution={label: float(p) for label, p in zip(label_set, probs)},
        predicted=label_set.labels[best],
        confidence=float(probs[best]),
    )


@dataclass
class TrainingConfig:
    seed: int = 13
    epochs: int = 50
    patience: int = 5
    batch_size: int = 0  # 0 = full batch
    learning_rate: float = 0.5

    def to_dict(self):
        return {
            "seed": self.seed,
            "epochs": self.epochs,
            "patience": self.patience,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
        }

    @classmethod
    def from_dict(cls, record):
        known = {k: record[k] for k in ("seed", "epochs", "patience", "batch_size", "learning_rate") if k in record}
        return cls(**known)


@dataclass
class TrainingReport:
    dev_f1_per_epoch: list[float] = field(default_factory=list)
    best_epoch: int = 0
    best_dev_f1: float = 0.0
    stopped_early: bool = False

    def to_dict(self):
        return {
            "dev_f1_per_epoch": list(self.dev_f1_per_epoch),
            "best_epoch": self.best_epoch,
            "best_dev_f1": self.best_dev_f1,
            "stopped_early": self.stopped_early,
        }


class Classifier(ABC):
    """Behavioral contract every decider implements.

    After :meth:`fit` finishes, :meth:`predict_subset`, :meth:`saliency` and
    :func:`top_k_labels` are read-only and safe to call concurrently.
    """

    impl_id = "abstract"

    def __init__(self, label_set: LabelSet, decider_id: str | None = None):
        self.label_set = label_set
        self.decider_id = decider_id or self.impl_id

    @property
    def supports_gradients(self) -> bool:
        return False

    @abstractmethod
    def predict_subset(self, sample: RelationSample, visible) -> PredictionResult:
        """Predict on the candidate made of ``visible`` tokens (deterministic)."""

    def fit(self, train, dev, config: TrainingConfig) -> TrainingReport:
        raise CapabilityError(f"{self.impl_id} classifier is not trainable")

    def saliency(self, sample: RelationSample, visible, reference: str) -> dict[int, float]:
        raise CapabilityError(f"{self.impl_id} classifier has no gradient support")


def top_k_labels(classifier: Classifier, sample: RelationSample, k: int) -> list[str]:
    """The k most likely labels on the full sentence, ties toward lower index."""
    if k < 1:
        raise ClassifierError(f"k must be >= 1, got {k}")
    k = min(k, len(classifier.label_set))
    result = classifier.predict_subset(sample, sample.all_tokens)
    order = sorted(
        range(len(classifier.label_set)),
        key=lambda i: (-result.distribution[classifier.label_set.labels[i]], i),
    )
    return [classifier.label_set.labels[i] for i in order[:k]]


# ---------------------------------------------------------------------------
# Keyword rule mock
# ---------------------------------------------------------------------------


class KeywordClassifier(Classifier):
    """Decides from the first visible token that matches a rule.

    Rules map a token text to (label, confidence); with no match the fallback
    label applies.  Confidences must exceed 1/|labels| so the rule label
    stays the argmax once the rest of the mass is spread uniformly.
    """

    impl_id = "keyword"

    def __init__(self, label_set, rules, fallback_label, fallback_confidence=0.4, decider_id=None):
        super().__init__(label_set, decider_id)
        floor = 1.0 / len(label_set)
        for token, (label, conf) in rules.items():
            if label not in label_set:
                raise ClassifierError(f"rule for {token!r} names unknown label {label!r}")
            if not floor < conf <= 1.0:
                raise ClassifierError(f"rule confidence for {token!r} must lie in (1/|labels|, 1]")
        if fallback_label not in label_set:
            raise ClassifierError(f"unknown fallback label {fallback_label!r}")
        if len(label_set) > 1 and not floor < fallback_confidence <= 1.0:
            raise ClassifierError("fallback confidence must lie in (1/|labels|, 1]")
        self.rules = dict(rules)
        self.fallback_label = fallback_label
        self.fallback_confidence = fallback_confidence

    def predict_subset(self, sample, visible):
        encoded = encode_sample(sample, visible)
        label, conf = self.fallback_label, self.fallback_confidence
        for pos in encoded.content_positions():
            hit = self.rules.get(encoded.tokens[pos])
            if hit is not None:
                label, conf = hit
                break
        k = len(self.label_set)
        if k == 1:
            return prediction_from_probs(self.label_set, [1.0])
        probs = np.full(k, (1.0 - conf) / (k - 1))
        probs[self.label_set.index(label)] = conf
        return prediction_from_probs(self.label_set, probs)


# ---------------------------------------------------------------------------
# Linear bag-of-words mock
# ---------------------------------------------------------------------------


class LinearBagOfWordsClassifier(Classifier):
    """Linear model over token counts, with analytic per-token gradients.

    Logits are ``W @ counts + b`` where counts range over a fixed vocabulary
    (marker tokens included, unknown tokens ignored).  Each visible token's
    input representation is its count coordinate, so the saliency of a token
    is the magnitude of the loss gradient along that coordinate.
    """

    impl_id = "linear_bow"

    def __init__(self, label_set, vocab=None, weights=None, bias=None, decider_id=None):
        super().__init__(label_set, decider_id)
        self.vocab: dict[str, int] = dict(vocab) if vocab else {}
        n_labels = len(label_set)
        n_vocab = len(self.vocab)
        self.weights = np.zeros((n_labels, n_vocab)) if weights is None else np.asarray(weights, dtype=float)
        self.bias = np.zeros(n_labels) if bias is None else np.asarray(bias, dtype=float)
        if self.weights.shape != (n_labels, n_vocab):
            raise ClassifierError(f"weight shape {self.weights.shape} does not match ({n_labels}, {n_vocab})")
        if self.bias.shape != (n_labels,):
            raise ClassifierError(f"bias shape {self.bias.shape} does not match ({n_labels},)")

    @property
    def supports_gradients(self) -> bool:
        return True

    def _counts(self, encoded: EncodedSample) -> np.ndarray:
        x = np.zeros(len(self.vocab))
        for token in encoded.tokens:
            col = self.vocab.get(token)
            if col is not None:
                x[col] += 1.0
        return x

    def _probs(self, encoded: EncodedSample) -> np.ndarray:
        return softmax(self.weights @ self._counts(encoded) + self.bias)

    def predict_subset(self, sample, visible):
        return prediction_from_probs(self.label_set, self._probs(encode_sample(sample, visible)))

    def saliency(self, sample, visible, reference):
        if reference not in self.label_set:
            raise ClassifierError(f"unknown reference label {reference!r}")
        encoded = encode_sample(sample, visible)
        probs = self._probs(encoded)
        delta = probs.copy()
        delta[self.label_set.index(reference)] -= 1.0  # d loss / d logits
        grad = self.weights.T @ delta  # d loss / d counts, one entry per vocab word
        scores: dict[int, float] = {}
        for pos in encoded.content_positions():
            col = self.vocab.get(encoded.tokens[pos])
            scores[encoded.source_indices[pos]] = abs(float(grad[col])) if col is not None else 0.0
        return scores

    def fit(self, train, dev, config: TrainingConfig) -> TrainingReport:
        if not train:
            raise TrainingError("training set is empty")
        for s in list(train) + list(dev):
            if s.label not in self.label_set:
                raise TrainingError(f"sample {s.sample_id!r} carries unknown label {s.label!r}")
        if not self.vocab:
            vocab: dict[str, int] = {}
            for marker in MARKER_TOKENS:
                vocab.setdefault(marker, len(vocab))
            for s in train:
                for tok in s.sentence.tokens:
                    vocab.setdefault(tok.text, len(vocab))
            self.vocab = vocab
            self.weights = np.zeros((len(self.label_set), len(vocab)))
            self.bias = np.zeros(len(self.label_set))

        x_train = np.stack([self._counts(encode_sample(s, s.all_tokens)) for s in train])
        y_train = np.array([self.label_set.index(s.label) for s in train])
        eval_set = dev if dev else train  # tiny corpora may lack a dev split
        x_dev = np.stack([self._counts(encode_sample(s, s.all_tokens)) for s in eval_set])
        y_dev = np.array([self.label_set.index(s.label) for s in eval_set])

        rng = np.random.default_rng(config.seed)
        n = len(train)
        batch = n if config.batch_size <= 0 else min(config.batch_size, n)
        report = TrainingReport()
        best = (self.weights.copy(), self.bias.copy())
        since_best = 0
        for epoch in range(1, config.epochs + 1):
            order = rng.permutation(n) if batch < n else np.arange(n)
            for lo in range(0, n, batch):
                rows = order[lo : lo + batch]
                xb, yb = x_train[rows], y_train[rows]
                logits = xb @ self.weights.T + self.bias
                probs = np.exp(logits - logits.max(axis=1, keepdims=True))
                probs /= probs.sum(axis=1, keepdims=True)
                probs[np.arange(len(rows)), yb] -= 1.0
                self.weights -= config.learning_rate * (probs.T @ xb) / len(rows)
                self.bias -= config.learning_rate * probs.sum(axis=0) / len(rows)
            dev_logits = x_dev @ self.weights.T + self.bias
            # micro-F1 equals accuracy for single-label decisions
            dev_f1 = float(np.mean(dev_logits.argmax(axis=1) == y_dev))
            report.dev_f1_per_epoch.append(dev_f1)
            if dev_f1 > report.best_dev_f1 or epoch == 1:
                report.best_dev_f1 = dev_f1
                report.best_epoch = epoch
                best = (self.weights.copy(), self.bias.copy())
                since_best = 0
            else:
                since_best += 1
                if since_best >= config.patience:
                    report.stopped_early = True
                    break
        self.weights, self.bias = best
        return report


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def save_predictions(predictions, path) -> None:
    """Write full-sentence predictions as JSON Lines keyed by sample id."""
    with open(path, "w", encoding="utf-8") as fh:
        for sample_id in sorted(predictions):
            result = predictions[sample_id]
            fh.write(
                json.dumps(
                    {
                        "sample_id": sample_id,
                        "predicted": result.predicted,
                        "confidence": result.confidence,
                        "distribution": result.distribution,
                    },
                    sort_keys=True,
                )
            )
            fh.write("\n")


def load_predictions(path) -> dict[str, PredictionResult]:
    predictions = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            record = json.loads(line)
            predictions[record["sample_id"]] = PredictionResult(
                distribution=record["distribution"],
                predicted=record["predicted"],
                confidence=record["confidence"],
            )
    return predictions


MANIFEST_NAME = "manifest.json"


def save_model(classifier: Classifier, directory) -> None:
    os.makedirs(directory, exist_ok=True)
    manifest = {
        "label_set": list(classifier.label_set),
        "contract_version": CONTRACT_VERSION,
        "impl_id": classifier.impl_id,
        "decider_id": classifier.decider_id,
    }
    with open(os.path.join(directory, MANIFEST_NAME), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    if isinstance(classifier, LinearBagOfWordsClassifier):
        np.savez(os.path.join(directory, "weights.npz"), weights=classifier.weights, bias=classifier.bias)
        with open(os.path.join(directory, "vocab.json"), "w", encoding="utf-8") as fh:
            json.dump(classifier.vocab, fh, sort_keys=True)
    elif isinstance(classifier, KeywordClassifier):
        with open(os.path.join(directory, "rules.json"), "w", encoding="utf-8") as fh:
            json.dump(
                {
                    "rules": {tok: list(rule) for tok, rule in classifier.rules.items()},
                    "fallback_label": classifier.fallback_label,
                    "fallback_confidence": classifier.fallback_confidence,
                },
                fh,
                indent=2,
                sort_keys=True,
            )
    else:
        raise ClassifierError(f"cannot persist classifier of type {type(classifier).__name__}")


def load_model(directory) -> Classifier:
    with open(os.path.join(directory, MANIFEST_NAME), "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    if manifest.get("contract_version") != CONTRACT_VERSION:
        raise ClassifierError(f"unsupported contract version {manifest.get('contract_version')!r}")
    label_set = LabelSet(tuple(manifest["label_set"]))
    impl = manifest.get("impl_id")
    decider_id = manifest.get("decider_id")
    if impl == "linear_bow":
        data = np.load(os.path.join(directory, "weights.npz"))
        with open(os.path.join(directory, "vocab.json"), "r", encoding="utf-8") as fh:
            vocab = json.load(fh)
        return LinearBagOfWordsClassifier(
            label_set, vocab=vocab, weights=data["weights"], bias=data["bias"], decider_id=decider_id
        )
    if impl == "keyword":
        with open(os.path.join(directory, "rules.json"), "r", encoding="utf-8") as fh:
            spec = json.load(fh)
        return KeywordClassifier(
            label_set,
            rules={tok: tuple(rule) for tok, rule in spec["rules"].items()},
            fallback_label=spec["fallback_label"],
            fallback_confidence=spec["fallback_confidence"],
            decider_id=decider_id,
        )
    raise ClassifierError(f"unknown classifier impl {impl!r}")
