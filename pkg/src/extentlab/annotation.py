"""Staged-reveal annotation sessions with durable, append-only storage.

A session starts each sample at the arguments-only view; annotators request
further tokens one at a time along the priority order, may reveal the
argument entity types, and finish a sample by choosing one of the preselected
labels or rejecting it.

Durability contract: a submitted record is appended and fsynced before the
call returns, so an acknowledged decision survives a crash.  Session-shaping
events (start, expand, type reveal) go to a journal in the same directory and
are replayed on restart; the cursor itself is derived from the records, never
trusted from the journal.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Mapping, Sequence

from .classifier import Classifier, top_k_labels
from .corpus import RelationSample, canonicalize_sample
from .extents import SemanticExtent
from .syntax import PriorityAssignment, stage_assignment

REJECT = "REJECT"

RECORDS_FILE = "records.jsonl"
JOURNAL_FILE = "sessions.jsonl"


class AnnotationError(Exception):
    """Service-level failure with a wire-protocol error code."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


@dataclass(frozen=True)
class AnnotationRecord:
    sample_id: str
    annotator_id: str
    label: str
    revealed_tokens: frozenset[int]
    semantic_class: str
    preselected: tuple[str, ...]
    entity_types_revealed: bool
    started_at: str
    decided_at: str

    def to_record(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "annotator_id": self.annotator_id,
            "label": self.label,
            "revealed_tokens": sorted(self.revealed_tokens),
            "semantic_class": self.semantic_class,
            "preselected": list(self.preselected),
            "entity_types_revealed": self.entity_types_revealed,
            "started_at": self.started_at,
            "decided_at": self.decided_at,
        }

    @classmethod
    def from_record(cls, record: Mapping) -> "AnnotationRecord":
        return cls(
            sample_id=record["sample_id"],
            annotator_id=record["annotator_id"],
            label=record["label"],
            revealed_tokens=frozenset(record["revealed_tokens"]),
            semantic_class=record["semantic_class"],
            preselected=tuple(record["preselected"]),
            entity_types_revealed=bool(record["entity_types_revealed"]),
            started_at=record["started_at"],
            decided_at=record["decided_at"],
        )

    def to_extent(self, decider_id: str | None = None) -> SemanticExtent:
        """View the human decision as a semantic extent for the analytics."""
        return SemanticExtent(
            sample_id=self.sample_id,
            decider_id=decider_id or self.annotator_id,
            tokens=self.revealed_tokens,
            semantic_class=self.semantic_class,
            predicted=self.label,
            confidence=1.0,
            mode="human",
            threshold_met=True,
        )


class AnnotationStore:
    """Append-only record log inside a directory; compaction is offline work."""

    def __init__(self, directory):
        os.makedirs(directory, exist_ok=True)
        self.directory = directory
        self._records_path = os.path.join(directory, RECORDS_FILE)
        self._journal_path = os.path.join(directory, JOURNAL_FILE)
        self._lock = threading.Lock()
        self._records: list[AnnotationRecord] = []
        self._by_key: dict[tuple[str, str], AnnotationRecord] = {}
        if os.path.exists(self._records_path):
            with open(self._records_path, "r", encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        record = AnnotationRecord.from_record(json.loads(line))
                        self._records.append(record)
                        self._by_key[(record.sample_id, record.annotator_id)] = record

    def __contains__(self, key: tuple[str, str]) -> bool:
        return key in self._by_key

    def append(self, record: AnnotationRecord) -> None:
        key = (record.sample_id, record.annotator_id)
        with self._lock:
            if key in self._by_key:
                raise AnnotationError(
                    "duplicate_submission",
                    f"sample {record.sample_id!r} already annotated by {record.annotator_id!r}",
                )
            self._append_line(self._records_path, record.to_record())
            self._records.append(record)
            self._by_key[key] = record

    def journal(self, event: dict) -> None:
        with self._lock:
            self._append_line(self._journal_path, event)

    def journal_events(self) -> list[dict]:
        if not os.path.exists(self._journal_path):
            return []
        events = []
        with open(self._journal_path, "r", encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    events.append(json.loads(line))
        return events

    @staticmethod
    def _append_line(path, payload: dict) -> None:
        # append + flush + fsync before acknowledging: the WAL contract
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(payload, sort_keys=True))
            fh.write("\n")
            fh.flush()
            os.fsync(fh.fileno())

    def records(self, annotator_id: str | None = None) -> list[AnnotationRecord]:
        with self._lock:
            if annotator_id is None:
                return list(self._records)
            return [r for r in self._records if r.annotator_id == annotator_id]


def export_annotations(store: AnnotationStore, path, annotator_id: str | None = None) -> int:
    """Dump records as JSON Lines; re-importing yields identical records."""
    records = store.records(annotator_id)
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_record(), sort_keys=True))
            fh.write("\n")
    return len(records)


def import_annotations(path) -> list[AnnotationRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(AnnotationRecord.from_record(json.loads(line)))
    return records


@dataclass
class AnnotationSession:
    session_id: str
    annotator_id: str
    sample_ids: tuple[str, ...]
    preselected: dict[str, tuple[str, ...]]
    cursor: int = 0
    pointers: dict[str, int] = field(default_factory=dict)  # revealed count per sample
    types_revealed: set[str] = field(default_factory=set)
    started_at: dict[str, str] = field(default_factory=dict)
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def done(self) -> bool:
        return self.cursor >= len(self.sample_ids)

    @property
    def current_sample_id(self) -> str:
        return self.sample_ids[self.cursor]


class AnnotationService:
    """Session bookkeeping on top of the store; one writer per session."""

    def __init__(self, samples, store: AnnotationStore, decider: Classifier, k: int = 3, clock=None):
        if isinstance(samples, Mapping):
            sample_map = dict(samples)
        else:
            sample_map = {s.sample_id: s for s in samples}
        self.samples = {sid: canonicalize_sample(s) for sid, s in sample_map.items()}
        self.store = store
        self.decider = decider
        self.default_k = k
        self.clock = clock or (lambda: datetime.now(timezone.utc).isoformat())
        self.sessions: dict[str, AnnotationSession] = {}
        self._registry_lock = threading.Lock()
        self._assignments: dict[str, PriorityAssignment] = {}
        self._replay()

    # -- internals ----------------------------------------------------------

    def assignment(self, sample_id: str) -> PriorityAssignment:
        if sample_id not in self._assignments:
            self._assignments[sample_id] = stage_assignment(self.samples[sample_id])
        return self._assignments[sample_id]

    def _replay(self) -> None:
        for event in self.store.journal_events():
            kind = event.get("event")
            if kind == "session_started":
                session = AnnotationSession(
                    session_id=event["session_id"],
                    annotator_id=event["annotator_id"],
                    sample_ids=tuple(event["sample_ids"]),
                    preselected={sid: tuple(v) for sid, v in event["preselected"].items()},
                )
                self.sessions[session.session_id] = session
            elif kind == "expand":
                session = self.sessions.get(event["session_id"])
                if session is not None:
                    sid = event["sample_id"]
                    session.pointers[sid] = session.pointers.get(sid, 0) + 1
            elif kind == "entity_types":
                session = self.sessions.get(event["session_id"])
                if session is not None:
                    session.types_revealed.add(event["sample_id"])
        # the cursor is derived from durable records, not from the journal
        for session in self.sessions.values():
            self._advance_past_annotated(session)

    def _advance_past_annotated(self, session: AnnotationSession) -> None:
        while not session.done and (session.current_sample_id, session.annotator_id) in self.store:
            session.cursor += 1

    def _session(self, session_id: str) -> AnnotationSession:
        session = self.sessions.get(session_id)
        if session is None:
            raise AnnotationError("unknown_session", f"no session {session_id!r}")
        return session

    def _require_current(self, session: AnnotationSession) -> str:
        if session.done:
            raise AnnotationError("end_of_session", f"session {session.session_id!r} is exhausted")
        return session.current_sample_id

    # -- operations ---------------------------------------------------------

    def start_session(self, annotator_id: str, sample_ids: Sequence[str], k: int | None = None) -> AnnotationSession:
        if not sample_ids:
            raise AnnotationError("bad_request", "a session needs at least one sample")
        k = self.default_k if k is None else k
        if k < 1:
            raise AnnotationError("bad_request", f"k must be >= 1, got {k}")
        missing = [sid for sid in sample_ids if sid not in self.samples]
        if missing:
            raise AnnotationError("unknown_sample", f"unknown sample ids: {missing[:5]}")
        # preselection is computed once and frozen for the whole session
        preselected = {
            sid: tuple(top_k_labels(self.decider, self.samples[sid], k)) for sid in dict.fromkeys(sample_ids)
        }
        session = AnnotationSession(
            session_id=uuid.uuid4().hex,
            annotator_id=annotator_id,
            sample_ids=tuple(sample_ids),
            preselected=preselected,
        )
        self.store.journal(
            {
                "event": "session_started",
                "session_id": session.session_id,
                "annotator_id": annotator_id,
                "sample_ids": list(session.sample_ids),
                "k": k,
                "preselected": {sid: list(v) for sid, v in preselected.items()},
                "created_at": self.clock(),
            }
        )
        self._advance_past_annotated(session)  # skip samples this annotator already decided
        with self._registry_lock:
            self.sessions[session.session_id] = session
        if not session.done:
            session.started_at[session.current_sample_id] = self.clock()
        return session

    def get_view(self, session_id: str) -> dict:
        session = self._session(session_id)
        with session.lock:
            return self._view(session)

    def _view(self, session: AnnotationSession) -> dict:
        view = {
            "session_id": session.session_id,
            "annotator_id": session.annotator_id,
            "done": session.done,
            "progress": {"done": session.cursor, "total": len(session.sample_ids)},
        }
        if session.done:
            return view
        sid = session.current_sample_id
        sample = self.samples[sid]
        assignment = self.assignment(sid)
        pointer = session.pointers.get(sid, 0)
        revealed = set(sample.argument_tokens) | set(assignment.expansion_order[:pointer])
        arguments = sample.argument_tokens
        view.update(
            {
                "sample_id": sid,
                "tokens": [
                    {
                        "index": i,
                        "text": sample.sentence.tokens[i].text if i in revealed else None,
                        "revealed": i in revealed,
                        "argument": i in arguments,
                    }
                    for i in range(len(sample.sentence))
                ],
                "stages": list(assignment.stages),
                "preselected": list(session.preselected[sid]),
                "all_revealed": pointer >= len(assignment.expansion_order),
                "entity_types": self._entity_types(sample) if sid in session.types_revealed else None,
            }
        )
        return view

    @staticmethod
    def _entity_types(sample: RelationSample) -> dict:
        return {
            "arg1": {"type": sample.arg1.entity_type, "subtype": sample.arg1.entity_subtype},
            "arg2": {"type": sample.arg2.entity_type, "subtype": sample.arg2.entity_subtype},
        }

    def expand(self, session_id: str) -> dict:
        session = self._session(session_id)
        with session.lock:
            sid = self._require_current(session)
            assignment = self.assignment(sid)
            pointer = session.pointers.get(sid, 0)
            if pointer < len(assignment.expansion_order):
                self.store.journal({"event": "expand", "session_id": session.session_id, "sample_id": sid})
                session.pointers[sid] = pointer + 1
            return self._view(session)

    def reveal_entity_types(self, session_id: str) -> dict:
        session = self._session(session_id)
        with session.lock:
            sid = self._require_current(session)
            if sid not in session.types_revealed:
                self.store.journal({"event": "entity_types", "session_id": session.session_id, "sample_id": sid})
                session.types_revealed.add(sid)
            return self._view(session)

    def submit(self, session_id: str, label: str) -> AnnotationRecord:
        session = self._session(session_id)
        with session.lock:
            sid = self._require_current(session)
            offered = set(session.preselected[sid]) | {REJECT}
            if label not in offered:
                raise AnnotationError(
                    "label_not_offered", f"label {label!r} is not among the preselected labels or {REJECT}"
                )
            sample = self.samples[sid]
            assignment = self.assignment(sid)
            pointer = session.pointers.get(sid, 0)
            revealed = frozenset(sample.argument_tokens) | frozenset(assignment.expansion_order[:pointer])
            semantic_class = "OA" if pointer == 0 else assignment.stage_of(assignment.expansion_order[pointer - 1])
            record = AnnotationRecord(
                sample_id=sid,
                annotator_id=session.annotator_id,
                label=label,
                revealed_tokens=revealed,
                semantic_class=semantic_class,
                preselected=session.preselected[sid],
                entity_types_revealed=sid in session.types_revealed,
                started_at=session.started_at.get(sid, ""),
                decided_at=self.clock(),
            )
            self.store.append(record)  # durable before the cursor moves
            session.cursor += 1
            if not session.done:
                session.started_at[session.current_sample_id] = self.clock()
            return record
