"""Document/sentence/sample data model, standoff ingestion, and serialization.

The data model is deliberately parser-agnostic: sentences arrive pre-tokenized
with dependency parses attached, and all annotation spans are aligned to token
boundaries during ingestion.  Values are immutable after construction and safe
to share across threads.

Two JSON Lines formats share one vocabulary of field names:

* raw standoff records (``span_unit: "char"``): entity/relation spans are
  character offsets into the owning sentence's text,
* corpus files (``span_unit: "token"``): spans are token indices, written by
  :func:`save_corpus` and read by :func:`load_corpus`.
"""

from __future__ import annotations

import json
import math
import random
import warnings
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

SCHEMA_VERSION = "1"
ROOT_HEAD = -1

SPLIT_NAMES = ("train", "dev", "test")

SYNTACTIC_CLASSES = (
    "Possessive",
    "Preposition",
    "PreMod",
    "Coordination",
    "Formulaic",
    "Participial",
    "Verbal",
    "Other",
)


class CorpusError(ValueError):
    """Base class for corpus-layer failures."""


class IngestionError(CorpusError):
    """Raised when a raw record is malformed; the message names the field."""


class AlignmentError(CorpusError):
    """Raised when an annotation span cannot be aligned to tokens."""


class ConsistencyError(CorpusError):
    """Raised when a relation mention references no known entity mention."""


class CanonicalizationError(CorpusError):
    """Raised when argument spans overlap and cannot be ordered."""


class SplitError(CorpusError):
    """Raised for invalid split ratios or unknown sample ids."""


class CorpusFormatError(CorpusError):
    """Raised when a corpus file cannot be parsed; carries the line number."""

    def __init__(self, message, line_number=None):
        super().__init__(message)
        self.line_number = line_number


class CorpusVersionError(CorpusFormatError):
    """Raised when a corpus file declares an unsupported schema version."""


class CorpusWarning(UserWarning):
    """Emitted once per unknown field encountered while loading."""


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Token:
    """One token of a sentence with its dependency attachment.

    ``head`` is the index of the governing token, or ``ROOT_HEAD`` (-1) for
    the sentence root.  ``pos`` is a coarse UPOS-style tag.
    """

    index: int
    text: str
    char_start: int
    char_end: int
    pos: str
    head: int
    deprel: str


@dataclass(frozen=True)
class Sentence:
    doc_id: str
    sent_index: int
    text: str
    tokens: tuple[Token, ...]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        _validate_tokens(self.text, self.tokens)

    def __len__(self):
        return len(self.tokens)


@dataclass(frozen=True)
class ArgumentSpan:
    """Half-open token-index span plus its entity typing."""

    start: int
    end: int
    entity_type: str = ""
    entity_subtype: str | None = None

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise CorpusError(f"invalid span [{self.start}, {self.end})")

    def indices(self):
        return range(self.start, self.end)

    def overlaps(self, other: "ArgumentSpan") -> bool:
        return self.start < other.end and other.start < self.end


@dataclass(frozen=True)
class EntityMention:
    """One mention of an entity: a typed span in one sentence."""

    sent: int
    span: ArgumentSpan


@dataclass(frozen=True)
class RelationMention:
    """A document-level relation annotation between two entity mentions."""

    label: str | None
    syntactic_class: str | None
    arg1: EntityMention
    arg2: EntityMention
    extent: tuple[int, int] | None = None  # token span in arg1's sentence


@dataclass(frozen=True)
class Document:
    doc_id: str
    genre: str
    sentences: tuple[Sentence, ...]
    entities: tuple[tuple[EntityMention, ...], ...]
    relations: tuple[RelationMention, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "sentences", tuple(self.sentences))
        object.__setattr__(self, "entities", tuple(tuple(c) for c in self.entities))
        object.__setattr__(self, "relations", tuple(self.relations))
        for ci, cluster in enumerate(self.entities):
            if not cluster:
                raise CorpusError(f"entity cluster {ci} is empty")
            for mention in cluster:
                self._check_mention(mention, f"entities[{ci}]")
        for ri, relation in enumerate(self.relations):
            self._check_mention(relation.arg1, f"relations[{ri}].arg1")
            self._check_mention(relation.arg2, f"relations[{ri}].arg2")

    def _check_mention(self, mention: EntityMention, where: str):
        if not (0 <= mention.sent < len(self.sentences)):
            raise CorpusError(f"{where}: sentence index {mention.sent} out of range")
        n = len(self.sentences[mention.sent])
        if mention.span.end > n:
            raise CorpusError(f"{where}: span {mention.span.start}..{mention.span.end} exceeds sentence length {n}")


@dataclass(frozen=True)
class RelationSample:
    """One classification instance: a sentence, two ordered argument spans.

    ``args_swapped`` records whether canonicalization exchanged the spans so
    callers can mirror directional labels.
    """

    sample_id: str
    sentence: Sentence
    arg1: ArgumentSpan
    arg2: ArgumentSpan
    label: str | None = None
    syntactic_class: str | None = None
    extent_span: tuple[int, int] | None = None
    genre: str = ""
    args_swapped: bool = False

    def __post_init__(self):
        n = len(self.sentence)
        for name, span in (("arg1", self.arg1), ("arg2", self.arg2)):
            if span.end > n:
                raise CorpusError(f"{name} span [{span.start},{span.end}) exceeds sentence length {n}")
        if self.extent_span is not None:
            s, e = self.extent_span
            if not (0 <= s < e <= n):
                raise CorpusError(f"extent span [{s},{e}) out of range")
            if not (s <= self.arg1.start and self.arg1.end <= e and s <= self.arg2.start and self.arg2.end <= e):
                raise CorpusError("extent span must cover both argument spans")

    @property
    def argument_tokens(self) -> frozenset[int]:
        return frozenset(self.arg1.indices()) | frozenset(self.arg2.indices())

    @property
    def all_tokens(self) -> frozenset[int]:
        return frozenset(range(len(self.sentence)))


@dataclass(frozen=True)
class LabelSet:
    labels: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        if not self.labels:
            raise CorpusError("label set is empty")
        if len(set(self.labels)) != len(self.labels):
            raise CorpusError("label set contains duplicates")

    def __len__(self):
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def __contains__(self, label):
        return label in self.labels

    def index(self, label: str) -> int:
        return self.labels.index(label)


@dataclass
class SplitAssignment:
    assignment: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        for sid, split in self.assignment.items():
            if split not in SPLIT_NAMES:
                raise SplitError(f"unknown split {split!r} for sample {sid!r}")

    def __getitem__(self, sample_id):
        return self.assignment[sample_id]

    def ids_for(self, split: str) -> list[str]:
        return [sid for sid, s in self.assignment.items() if s == split]

    def counts(self) -> Counter:
        return Counter(self.assignment.values())


@dataclass(frozen=True)
class BuildResult:
    samples: tuple[RelationSample, ...]
    skipped_cross_sentence: int


@dataclass(frozen=True)
class StatsReport:
    n_samples: int
    labels: dict
    syntactic_classes: dict
    per_genre: dict

    def to_dict(self):
        return {
            "n_samples": self.n_samples,
            "labels": dict(self.labels),
            "syntactic_classes": dict(self.syntactic_classes),
            "per_genre": {
                g: {
                    "n_samples": sub["n_samples"],
                    "labels": dict(sub["labels"]),
                    "syntactic_classes": dict(sub["syntactic_classes"]),
                }
                for g, sub in self.per_genre.items()
            },
        }


# ---------------------------------------------------------------------------
# Validation helpers
# ---------------------------------------------------------------------------


def _validate_tokens(text: str, tokens: Sequence[Token]):
    n = len(tokens)
    if n == 0:
        raise CorpusError("sentence has no tokens")
    prev_end = 0
    roots = 0
    for i, tok in enumerate(tokens):
        if tok.index != i:
            raise CorpusError(f"token {i} carries index {tok.index}")
        if not (0 <= tok.char_start < tok.char_end <= len(text)):
            raise CorpusError(f"token {i} offsets [{tok.char_start},{tok.char_end}) out of bounds")
        if tok.char_start < prev_end:
            raise CorpusError(f"token {i} overlaps its predecessor")
        prev_end = tok.char_end
        if text[tok.char_start : tok.char_end] != tok.text:
            raise CorpusError(
                f"token {i} text {tok.text!r} does not match substring "
                f"{text[tok.char_start:tok.char_end]!r}"
            )
        if tok.head == ROOT_HEAD:
            roots += 1
        elif not (0 <= tok.head < n):
            raise CorpusError(f"token {i} head {tok.head} out of range")
        elif tok.head == i:
            raise CorpusError(f"token {i} is its own head")
    if roots != 1:
        raise CorpusError(f"sentence has {roots} roots, expected exactly 1")
    # cycle check: every token must reach the root
    for i in range(n):
        seen = set()
        j = i
        while tokens[j].head != ROOT_HEAD:
            if j in seen:
                raise CorpusError(f"dependency cycle through token {i}")
            seen.add(j)
            j = tokens[j].head


# ---------------------------------------------------------------------------
# Ingestion
# ---------------------------------------------------------------------------


def _require(record: Mapping, key: str, kind, where: str):
    if key not in record:
        raise IngestionError(f"{where}.{key}: missing")
    value = record[key]
    if kind is int and isinstance(value, bool):
        raise IngestionError(f"{where}.{key}: expected {kind.__name__}, got bool")
    if not isinstance(value, kind):
        raise IngestionError(f"{where}.{key}: expected {kind.__name__}, got {type(value).__name__}")
    return value


def align_char_span(sentence: Sentence, char_start: int, char_end: int) -> tuple[int, int]:
    """Snap a character span outward to the smallest covering token span.

    A span that starts or ends mid-token grows to include the whole token, so
    annotated material is never lost.
    """
    if not (0 <= char_start < char_end <= len(sentence.text)):
        raise AlignmentError(
            f"char span [{char_start},{char_end}) outside sentence text of length {len(sentence.text)}"
        )
    covered = [t.index for t in sentence.tokens if t.char_end > char_start and t.char_start < char_end]
    if not covered:
        raise AlignmentError(f"char span [{char_start},{char_end}) covers no token")
    return covered[0], covered[-1] + 1


def _parse_sentence(doc_id: str, sent_index: int, record: Mapping) -> Sentence:
    where = f"sentences[{sent_index}]"
    text = _require(record, "text", str, where)
    raw_tokens = _require(record, "tokens", list, where)
    tokens = []
    for ti, tok in enumerate(raw_tokens):
        tw = f"{where}.tokens[{ti}]"
        if not isinstance(tok, Mapping):
            raise IngestionError(f"{tw}: expected object")
        tokens.append(
            Token(
                index=ti,
                text=_require(tok, "text", str, tw),
                char_start=_require(tok, "start", int, tw),
                char_end=_require(tok, "end", int, tw),
                pos=_require(tok, "pos", str, tw),
                head=_require(tok, "head", int, tw),
                deprel=_require(tok, "deprel", str, tw),
            )
        )
    try:
        return Sentence(doc_id=doc_id, sent_index=sent_index, text=text, tokens=tuple(tokens))
    except CorpusError as exc:
        raise IngestionError(f"{where}: {exc}") from exc


def _span_record(record: Mapping, where: str) -> tuple[int, int, int]:
    sent = _require(record, "sent", int, where)
    start = _require(record, "start", int, where)
    end = _require(record, "end", int, where)
    return sent, start, end


def _mention_from_record(
    sentences: Sequence[Sentence], record: Mapping, where: str, char_offsets: bool
) -> EntityMention:
    sent, start, end = _span_record(record, where)
    if not (0 <= sent < len(sentences)):
        raise IngestionError(f"{where}.sent: index {sent} out of range")
    entity_type = str(record.get("type", ""))
    entity_subtype = record.get("subtype")
    if char_offsets:
        tok_start, tok_end = align_char_span(sentences[sent], start, end)
    else:
        tok_start, tok_end = start, end
        if not (0 <= tok_start < tok_end <= len(sentences[sent])):
            raise IngestionError(f"{where}: token span [{tok_start},{tok_end}) out of range")
    span = ArgumentSpan(start=tok_start, end=tok_end, entity_type=entity_type, entity_subtype=entity_subtype)
    return EntityMention(sent=sent, span=span)


def ingest_document(raw: Mapping) -> Document:
    """Build a :class:`Document` from a raw standoff record.

    Entity and relation spans in the raw record are character offsets into
    the owning sentence's text and are snapped outward to token boundaries.
    """
    if not isinstance(raw, Mapping):
        raise IngestionError("document: expected object")
    char_offsets = raw.get("span_unit", "char") == "char"
    doc_id = _require(raw, "doc_id", str, "document")
    genre = str(raw.get("genre", ""))
    raw_sentences = _require(raw, "sentences", list, "document")
    sentences = []
    for si, rec in enumerate(raw_sentences):
        if not isinstance(rec, Mapping):
            raise IngestionError(f"sentences[{si}]: expected object")
        sentences.append(_parse_sentence(doc_id, si, rec))
    sentences = tuple(sentences)
    clusters = []
    for ci, cluster in enumerate(raw.get("entities", [])):
        if not isinstance(cluster, list) or not cluster:
            raise IngestionError(f"entities[{ci}]: expected non-empty list")
        mentions = tuple(
            _mention_from_record(sentences, m, f"entities[{ci}][{mi}]", char_offsets)
            for mi, m in enumerate(cluster)
        )
        clusters.append(mentions)
    known = {(m.sent, m.span.start, m.span.end): m for cluster in clusters for m in cluster}
    relations = []
    for ri, rel in enumerate(raw.get("relations", [])):
        where = f"relations[{ri}]"
        if not isinstance(rel, Mapping):
            raise IngestionError(f"{where}: expected object")
        arg1 = _mention_from_record(sentences, _require(rel, "arg1", Mapping, where), f"{where}.arg1", char_offsets)
        arg2 = _mention_from_record(sentences, _require(rel, "arg2", Mapping, where), f"{where}.arg2", char_offsets)
        # adopt the typing of the matching entity mention when one exists
        arg1 = known.get((arg1.sent, arg1.span.start, arg1.span.end), arg1)
        arg2 = known.get((arg2.sent, arg2.span.start, arg2.span.end), arg2)
        extent = None
        if rel.get("extent") is not None:
            ext = rel["extent"]
            es = _require(ext, "start", int, f"{where}.extent")
            ee = _require(ext, "end", int, f"{where}.extent")
            if char_offsets:
                extent = align_char_span(sentences[arg1.sent], es, ee)
            else:
                extent = (es, ee)
        relations.append(
            RelationMention(
                label=rel.get("label"),
                syntactic_class=rel.get("syntactic_class"),
                arg1=arg1,
                arg2=arg2,
                extent=extent,
            )
        )
    return Document(doc_id=doc_id, genre=genre, sentences=sentences, entities=tuple(clusters), relations=tuple(relations))


# ---------------------------------------------------------------------------
# Sample construction
# ---------------------------------------------------------------------------


def build_samples(doc: Document, mentions: Sequence[RelationMention] | None = None) -> BuildResult:
    """Turn relation mentions into classification samples.

    Only mentions whose two arguments fall inside one sentence yield a
    sample; the rest are skipped and counted.  One sentence may back several
    samples.
    """
    if mentions is None:
        mentions = doc.relations
    known = {(m.sent, m.span.start, m.span.end) for cluster in doc.entities for m in cluster}
    samples = []
    skipped = 0
    for ri, rel in enumerate(mentions):
        for name, arg in (("arg1", rel.arg1), ("arg2", rel.arg2)):
            key = (arg.sent, arg.span.start, arg.span.end)
            if known and key not in known:
                raise ConsistencyError(
                    f"relation {ri} {name} {key} references no entity mention of document {doc.doc_id!r}"
                )
        if rel.arg1.sent != rel.arg2.sent:
            skipped += 1
            continue
        sentence = doc.sentences[rel.arg1.sent]
        samples.append(
            RelationSample(
                sample_id=f"{doc.doc_id}.r{ri}",
                sentence=sentence,
                arg1=rel.arg1.span,
                arg2=rel.arg2.span,
                label=rel.label,
                syntactic_class=rel.syntactic_class,
                extent_span=rel.extent,
                genre=doc.genre,
            )
        )
    return BuildResult(samples=tuple(samples), skipped_cross_sentence=skipped)


def canonicalize_sample(sample: RelationSample) -> RelationSample:
    """Reorder the arguments so arg1 precedes arg2, recording the swap.

    Overlapping spans are rejected: the task requires disjoint, ordered
    arguments.
    """
    if sample.arg1.overlaps(sample.arg2):
        raise CanonicalizationError(
            f"argument spans overlap in sample {sample.sample_id!r}: "
            f"[{sample.arg1.start},{sample.arg1.end}) vs [{sample.arg2.start},{sample.arg2.end})"
        )
    if sample.arg1.start <= sample.arg2.start:
        return sample
    return replace(sample, arg1=sample.arg2, arg2=sample.arg1, args_swapped=not sample.args_swapped)


# ---------------------------------------------------------------------------
# Splitting and statistics
# ---------------------------------------------------------------------------


def split_dataset(
    samples: Sequence[RelationSample],
    base_split: Mapping[str, str] | None = None,
    ratio: tuple[float, float, float] = (0.8, 0.1, 0.1),
    seed: int = 0,
) -> SplitAssignment:
    """Assign every sample to train/dev/test.

    Samples listed in ``base_split`` keep their split; the rest are placed by
    a seeded shuffle so the ratio holds over the whole set.  The result is a
    deterministic function of (samples, base_split, ratio, seed).
    """
    if len(ratio) != len(SPLIT_NAMES):
        raise SplitError(f"expected {len(SPLIT_NAMES)} ratios, got {len(ratio)}")
    if any(r <= 0 for r in ratio):
        raise SplitError("split ratios must be positive")
    if abs(sum(ratio) - 1.0) > 1e-9:
        raise SplitError(f"split ratios sum to {sum(ratio)}, expected 1")
    ids = [s.sample_id for s in samples]
    if len(set(ids)) != len(ids):
        raise SplitError("duplicate sample ids")
    id_set = set(ids)
    assignment: dict[str, str] = {}
    if base_split:
        unknown = sorted(set(base_split) - id_set)
        if unknown:
            raise SplitError(f"base split references unknown sample ids: {unknown[:5]}")
        for sid, split in base_split.items():
            if split not in SPLIT_NAMES:
                raise SplitError(f"unknown split {split!r} for sample {sid!r}")
            assignment[sid] = split

    n = len(ids)
    exact = [r * n for r in ratio]
    targets = [math.floor(e) for e in exact]
    leftover = n - sum(targets)
    by_fraction = sorted(range(len(SPLIT_NAMES)), key=lambda i: (-(exact[i] - targets[i]), i))
    for i in by_fraction[:leftover]:
        targets[i] += 1

    counts = Counter(assignment.values())
    remaining = [sid for sid in ids if sid not in assignment]
    rng = random.Random(seed)
    rng.shuffle(remaining)
    for sid in remaining:
        # fill the split furthest below its target; ties favor larger ratios
        best = max(
            range(len(SPLIT_NAMES)),
            key=lambda i: (targets[i] - counts.get(SPLIT_NAMES[i], 0), ratio[i], -i),
        )
        assignment[sid] = SPLIT_NAMES[best]
        counts[SPLIT_NAMES[best]] += 1
    return SplitAssignment(assignment=assignment)


def corpus_stats(samples: Sequence[RelationSample]) -> StatsReport:
    """Histograms of labels and syntactic classes, overall and per genre."""

    def bucket(value):
        return value if value is not None else "NONE"

    labels = Counter(bucket(s.label) for s in samples)
    classes = Counter(bucket(s.syntactic_class) for s in samples)
    per_genre: dict[str, dict] = {}
    for s in samples:
        sub = per_genre.setdefault(
            s.genre, {"n_samples": 0, "labels": Counter(), "syntactic_classes": Counter()}
        )
        sub["n_samples"] += 1
        sub["labels"][bucket(s.label)] += 1
        sub["syntactic_classes"][bucket(s.syntactic_class)] += 1
    return StatsReport(
        n_samples=len(samples),
        labels=dict(sorted(labels.items())),
        syntactic_classes=dict(sorted(classes.items())),
        per_genre={g: per_genre[g] for g in sorted(per_genre)},
    )


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

_DOC_FIELDS = {"schema_version", "span_unit", "doc_id", "genre", "sentences", "entities", "relations"}
_SENT_FIELDS = {"text", "tokens"}
_TOKEN_FIELDS = {"text", "start", "end", "pos", "head", "deprel"}
_SPAN_FIELDS = {"sent", "start", "end", "type", "subtype"}
_REL_FIELDS = {"label", "syntactic_class", "arg1", "arg2", "extent"}


def document_to_record(doc: Document) -> dict:
    def span_obj(m: EntityMention):
        return {
            "sent": m.sent,
            "start": m.span.start,
            "end": m.span.end,
            "type": m.span.entity_type,
            "subtype": m.span.entity_subtype,
        }

    return {
        "schema_version": SCHEMA_VERSION,
        "span_unit": "token",
        "doc_id": doc.doc_id,
        "genre": doc.genre,
        "sentences": [
            {
                "text": s.text,
                "tokens": [
                    {
                        "text": t.text,
                        "start": t.char_start,
                        "end": t.char_end,
                        "pos": t.pos,
                        "head": t.head,
                        "deprel": t.deprel,
                    }
                    for t in s.tokens
                ],
            }
            for s in doc.sentences
        ],
        "entities": [[span_obj(m) for m in cluster] for cluster in doc.entities],
        "relations": [
            {
                "label": r.label,
                "syntactic_class": r.syntactic_class,
                "arg1": span_obj(r.arg1),
                "arg2": span_obj(r.arg2),
                "extent": None if r.extent is None else {"start": r.extent[0], "end": r.extent[1]},
            }
            for r in doc.relations
        ],
    }


def _warn_unknown(record: Mapping, allowed: set, where: str):
    for key in record:
        if key not in allowed:
            warnings.warn(f"{where}: ignoring unknown field {key!r}", CorpusWarning, stacklevel=3)


def document_from_record(record: Mapping) -> Document:
    version = record.get("schema_version")
    if version != SCHEMA_VERSION:
        raise CorpusVersionError(f"unsupported schema version {version!r}, expected {SCHEMA_VERSION!r}")
    _warn_unknown(record, _DOC_FIELDS, "document")
    for si, sent in enumerate(record.get("sentences", [])):
        if isinstance(sent, Mapping):
            _warn_unknown(sent, _SENT_FIELDS, f"sentences[{si}]")
            for ti, tok in enumerate(sent.get("tokens", [])):
                if isinstance(tok, Mapping):
                    _warn_unknown(tok, _TOKEN_FIELDS, f"sentences[{si}].tokens[{ti}]")
    for ci, cluster in enumerate(record.get("entities", [])):
        if isinstance(cluster, list):
            for mi, m in enumerate(cluster):
                if isinstance(m, Mapping):
                    _warn_unknown(m, _SPAN_FIELDS, f"entities[{ci}][{mi}]")
    for ri, rel in enumerate(record.get("relations", [])):
        if isinstance(rel, Mapping):
            _warn_unknown(rel, _REL_FIELDS, f"relations[{ri}]")
    return ingest_document(record)


def save_corpus(documents: Iterable[Document], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in documents:
            fh.write(json.dumps(document_to_record(doc), ensure_ascii=False, sort_keys=True))
            fh.write("\n")


def load_corpus(path) -> list[Document]:
    documents = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"line {line_number}: {exc.msg}", line_number=line_number) from exc
            try:
                documents.append(document_from_record(record))
            except CorpusVersionError:
                raise
            except CorpusError as exc:
                raise CorpusFormatError(f"line {line_number}: {exc}", line_number=line_number) from exc
    return documents


def save_split(split: SplitAssignment, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for sid in sorted(split.assignment):
            fh.write(json.dumps({"sample_id": sid, "split": split.assignment[sid]}))
            fh.write("\n")


def load_split(path) -> SplitAssignment:
    assignment = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"line {line_number}: {exc.msg}", line_number=line_number) from exc
            assignment[record["sample_id"]] = record["split"]
    return SplitAssignment(assignment=assignment)
