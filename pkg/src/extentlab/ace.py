"""Thin converter from ACE-style standoff XML to raw standoff records.

The licensed corpus itself is never bundled; this adapter only reshapes
annotations the user already has.  Callers supply the annotation XML plus
pre-tokenized sentences (produced by any tokenizer/parser) whose character
offsets refer to the same text the XML offsets index into.  Entity or
relation mentions that do not fit inside a single detected sentence are
dropped and counted, not guessed at.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass


@dataclass
class AceConversion:
    record: dict
    dropped_entity_mentions: int
    dropped_relation_mentions: int


def _charseq(element) -> tuple[int, int]:
    seq = element.find(".//charseq")
    if seq is None:
        raise ValueError("annotation without charseq")
    # ACE charseq END is inclusive; our spans are half-open
    return int(seq.get("START")), int(seq.get("END")) + 1


def ace_to_raw(apf_xml: str, sentences: list[dict], doc_id: str | None = None, genre: str = "") -> AceConversion:
    """Convert one ACE document to a raw standoff record (``span_unit: char``).

    ``sentences`` is a list of ``{"doc_start": int, "text": str, "tokens":
    [...]}`` where token offsets are sentence-relative and ``doc_start`` maps
    the sentence into the document-level offset space of the XML.
    """
    root = ET.fromstring(apf_xml)
    document = root.find(".//document")
    if document is None:
        raise ValueError("no <document> element")
    doc_id = doc_id or document.get("DOCID") or "unknown"

    bounds = [(s["doc_start"], s["doc_start"] + len(s["text"])) for s in sentences]

    def locate(start: int, end: int):
        for index, (lo, hi) in enumerate(bounds):
            if lo <= start and end <= hi:
                return index, start - lo, end - lo
        return None

    dropped_entities = 0
    clusters = []
    mention_spans: dict[str, dict] = {}
    for entity in document.findall(".//entity"):
        cluster = []
        for mention in entity.findall("entity_mention"):
            start, end = _charseq(mention.find("extent") or mention)
            placed = locate(start, end)
            if placed is None:
                dropped_entities += 1
                continue
            sent, rel_start, rel_end = placed
            span = {
                "sent": sent,
                "start": rel_start,
                "end": rel_end,
                "type": entity.get("TYPE", ""),
                "subtype": entity.get("SUBTYPE"),
            }
            cluster.append(span)
            if mention.get("ID"):
                mention_spans[mention.get("ID")] = span
        if cluster:
            clusters.append(cluster)

    dropped_relations = 0
    relations = []
    for relation in document.findall(".//relation"):
        for mention in relation.findall("relation_mention"):
            args = {}
            for arg in mention.findall("relation_mention_argument"):
                role = arg.get("ROLE", "")
                if role in ("Arg-1", "Arg-2"):
                    args[role] = mention_spans.get(arg.get("REFID"))
            if args.get("Arg-1") is None or args.get("Arg-2") is None:
                dropped_relations += 1
                continue
            extent = None
            extent_el = mention.find("extent")
            if extent_el is not None:
                start, end = _charseq(extent_el)
                placed = locate(start, end)
                if placed is not None and placed[0] == args["Arg-1"]["sent"]:
                    extent = {"start": placed[1], "end": placed[2]}
            relations.append(
                {
                    "label": relation.get("TYPE"),
                    "syntactic_class": mention.get("LEXICALCONDITION"),
                    "arg1": {k: args["Arg-1"][k] for k in ("sent", "start", "end")},
                    "arg2": {k: args["Arg-2"][k] for k in ("sent", "start", "end")},
                    "extent": extent,
                }
            )

    record = {
        "span_unit": "char",
        "doc_id": doc_id,
        "genre": genre,
        "sentences": [{"text": s["text"], "tokens": s["tokens"]} for s in sentences],
        "entities": clusters,
        "relations": relations,
    }
    return AceConversion(
        record=record,
        dropped_entity_mentions=dropped_entities,
        dropped_relation_mentions=dropped_relations,
    )
