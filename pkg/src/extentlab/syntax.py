"""Priority staging of tokens over a sample's dependency tree.

Every token receives the earliest applicable stage:

* ``OA`` -- the argument tokens themselves,
* ``AS`` -- tokens inside the syntactic subtrees of the arguments,
* ``VOP`` -- verbs on the dependency path between the argument heads,
* ``BA`` -- the remaining tokens between the arguments,
* ``E``  -- tokens inside the corpus-annotated relation extent (skipped when
  no extent annotation exists),
* ``A``  -- everything else.

The reveal/expansion order walks the non-argument tokens by (stage, index).
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import ROOT_HEAD, ArgumentSpan, RelationSample, Sentence

STAGES = ("OA", "AS", "VOP", "BA", "E", "A")
STAGE_RANK = {stage: rank for rank, stage in enumerate(STAGES)}

# coarse POS classes counted as verbal for the VOP stage
VERB_POS = frozenset({"VERB", "AUX"})


@dataclass(frozen=True)
class PriorityAssignment:
    """Per-token stage plus the derived total expansion order."""

    stages: tuple[str, ...]
    expansion_order: tuple[int, ...]

    def stage_of(self, index: int) -> str:
        return self.stages[index]

    def to_dict(self):
        return {"stages": list(self.stages), "order": list(self.expansion_order)}


def children_map(sentence: Sentence) -> dict[int, list[int]]:
    children: dict[int, list[int]] = {i: [] for i in range(len(sentence))}
    for tok in sentence.tokens:
        if tok.head != ROOT_HEAD:
            children[tok.head].append(tok.index)
    return children


def span_head(sentence: Sentence, span: ArgumentSpan) -> int:
    """The token of the span whose head lies outside it (leftmost on ties)."""
    inside = set(span.indices())
    heads = [i for i in span.indices() if sentence.tokens[i].head == ROOT_HEAD or sentence.tokens[i].head not in inside]
    if heads:
        return heads[0]
    return span.start


def _descendants(sentence: Sentence, root: int) -> set[int]:
    children = children_map(sentence)
    seen = {root}
    stack = [root]
    while stack:
        node = stack.pop()
        for child in children[node]:
            if child not in seen:
                seen.add(child)
                stack.append(child)
    return seen


def argument_subtree_tokens(sentence: Sentence, arg1: ArgumentSpan, arg2: ArgumentSpan) -> set[int]:
    """Tokens under either argument head, excluding the arguments themselves."""
    subtree = _descendants(sentence, span_head(sentence, arg1)) | _descendants(sentence, span_head(sentence, arg2))
    return subtree - set(arg1.indices()) - set(arg2.indices())


def _path_to_root(sentence: Sentence, index: int) -> list[int]:
    path = [index]
    while sentence.tokens[path[-1]].head != ROOT_HEAD:
        path.append(sentence.tokens[path[-1]].head)
    return path


def dependency_path(sentence: Sentence, i: int, j: int) -> list[int]:
    """The unique tree path from token i to token j, both inclusive."""
    up_i = _path_to_root(sentence, i)
    up_j = _path_to_root(sentence, j)
    on_i = set(up_i)
    lca = next(node for node in up_j if node in on_i)
    head = up_i[: up_i.index(lca) + 1]
    tail = up_j[: up_j.index(lca)]
    return head + list(reversed(tail))


def stage_assignment(sample: RelationSample) -> PriorityAssignment:
    """Stage every token of the sample's sentence, earliest stage winning."""
    sentence = sample.sentence
    n = len(sentence)
    stages: list[str | None] = [None] * n

    def claim(indices, stage):
        for i in indices:
            if 0 <= i < n and stages[i] is None:
                stages[i] = stage

    claim(sorted(sample.argument_tokens), "OA")
    claim(sorted(argument_subtree_tokens(sentence, sample.arg1, sample.arg2)), "AS")
    path = dependency_path(sentence, span_head(sentence, sample.arg1), span_head(sentence, sample.arg2))
    claim([i for i in path if sentence.tokens[i].pos in VERB_POS], "VOP")
    claim(range(sample.arg1.end, sample.arg2.start), "BA")
    if sample.extent_span is not None:
        claim(range(sample.extent_span[0], sample.extent_span[1]), "E")
    claim(range(n), "A")
    assignment = tuple(stages)
    order = tuple(
        sorted(
            (i for i in range(n) if assignment[i] != "OA"),
            key=lambda i: (STAGE_RANK[assignment[i]], i),
        )
    )
    return PriorityAssignment(stages=assignment, expansion_order=order)


def expansion_order(assignment: PriorityAssignment) -> tuple[int, ...]:
    """The deterministic reveal order: non-argument tokens by (stage, index)."""
    return assignment.expansion_order
