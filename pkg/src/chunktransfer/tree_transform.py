"""Collapse word-level trees to chunk-level trees and expand them back."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

from .chunks import CHUNK_TYPES, ChunkSpan, chunk_of_token
from .conllu import Sentence, Token, check_sentence

ROOT = 0
INTRA_PLACEHOLDER = "dep"


class StructureError(ValueError):
    pass


@dataclass(frozen=True)
class ChunkNode:
    ordinal: int
    head_upos: str
    chunk_type: str
    head_token_id: int
    # carried for readable output only, never used as a feature
    head_form: str = "_"


@dataclass(frozen=True)
class ChunkLevelTree:
    nodes: tuple[ChunkNode, ...]
    arcs: Mapping[int, tuple[int, str]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def heads(self) -> list[int]:
        return [self.arcs[node.ordinal][0] for node in self.nodes]

    @property
    def labels(self) -> list[str]:
        return [self.arcs[node.ordinal][1] for node in self.nodes]

    def with_arcs(self, heads: Sequence[int], labels: Sequence[str]) -> "ChunkLevelTree":
        arcs = {node.ordinal: (h, l) for node, h, l in zip(self.nodes, heads, labels)}
        return replace(self, arcs=arcs)


def _check_partition(chunks: Sequence[ChunkSpan], n: int) -> None:
    expected = 1
    for k, chunk in enumerate(chunks, start=1):
        if chunk.ordinal != k:
            raise StructureError(f"chunk ordinals must run 1..m, found {chunk.ordinal} at position {k}")
        if chunk.start != expected:
            raise StructureError(f"chunk {k} starts at {chunk.start}, expected {expected}")
        expected = chunk.end + 1
    if expected != n + 1:
        raise StructureError(f"chunks cover 1..{expected - 1} but the sentence has {n} tokens")


def _check_tree(heads: Sequence[int]) -> None:
    m = len(heads)
    if sum(1 for h in heads if h == ROOT) != 1:
        raise StructureError("chunk-level tree must have exactly one root attachment")
    for k, h in enumerate(heads, start=1):
        if not 0 <= h <= m or h == k:
            raise StructureError(f"chunk {k} has invalid parent {h}")
        seen = set()
        node = k
        while node != ROOT:
            if node in seen:
                raise StructureError(f"chunk-level arcs form a cycle through chunk {k}")
            seen.add(node)
            node = heads[node - 1]


def collapse_tree(sentence: Sentence, chunks: Sequence[ChunkSpan]) -> ChunkLevelTree:
    """Replace every chunk by its head and keep only the arcs between heads.

    A chunk head must attach to the head of another chunk.  The one
    exception is a chunk created by discontiguity repair, which is attached
    to whichever chunk contains its parent.
    """
    n = len(sentence)
    _check_partition(chunks, n)
    owner = chunk_of_token(chunks, n)
    nodes, arcs = [], {}
    for chunk in chunks:
        tok = sentence.token(chunk.head)
        nodes.append(ChunkNode(chunk.ordinal, tok.upos, chunk.chunk_type, tok.id, tok.form))
        if tok.head == 0:
            arcs[chunk.ordinal] = (ROOT, tok.deprel)
            continue
        target = chunks[owner[tok.head] - 1]
        if target.ordinal == chunk.ordinal:
            raise StructureError(
                f"chunk head {tok.id} attaches to token {tok.head} inside its own chunk")
        if target.head != tok.head and not chunk.promoted:
            raise StructureError(
                f"chunk head {tok.id} attaches to token {tok.head}, "
                f"a non-head token of the chunk headed by {target.head}")
        arcs[chunk.ordinal] = (target.ordinal, tok.deprel)
    return ChunkLevelTree(tuple(nodes), arcs)


def expand_tree(ctree: ChunkLevelTree, chunks: Sequence[ChunkSpan], tokens: Sequence[Token],
                sent_id: str = "", comments: Sequence[str] = ()) -> Sentence:
    """Rebuild a full tree from chunk-level arcs.

    Chunk heads take the arcs of their chunks; every other token attaches
    flat to its own chunk head with the placeholder relation ``dep``.
    Columns other than HEAD and DEPREL are copied from ``tokens``.
    """
    if len(ctree.nodes) != len(chunks):
        raise StructureError(f"{len(ctree.nodes)} chunk nodes for {len(chunks)} chunks")
    _check_partition(chunks, len(tokens))
    for node, chunk in zip(ctree.nodes, chunks):
        if node.ordinal != chunk.ordinal or node.head_token_id != chunk.head:
            raise StructureError(
                f"chunk node {node.ordinal} (head {node.head_token_id}) does not match "
                f"chunk {chunk.ordinal} (head {chunk.head})")
    missing = [c.ordinal for c in chunks if c.ordinal not in ctree.arcs]
    if missing:
        raise StructureError(f"no arcs for chunks {missing}")
    _check_tree(ctree.heads)

    out = list(tokens)
    for chunk in chunks:
        parent, label = ctree.arcs[chunk.ordinal]
        for t in chunk.token_ids:
            if t == chunk.head:
                head = 0 if parent == ROOT else chunks[parent - 1].head
                out[t - 1] = replace(tokens[t - 1], head=head, deprel=label)
            else:
                out[t - 1] = replace(tokens[t - 1], head=chunk.head, deprel=INTRA_PLACEHOLDER)
    return check_sentence(Sentence(tuple(out), sent_id, tuple(comments)))


def ctree_nodes(tokens: Sequence[Token], chunks: Sequence[ChunkSpan]) -> tuple[ChunkNode, ...]:
    """Chunk nodes for a sentence without a gold tree (target side)."""
    return tuple(ChunkNode(c.ordinal, tokens[c.head - 1].upos, c.chunk_type, c.head,
                           tokens[c.head - 1].form) for c in chunks)


def ctree_to_sentence(ctree: ChunkLevelTree, sent_id: str = "", comments: Sequence[str] = ()) -> Sentence:
    """One CoNLL-U row per chunk: FORM = head form, UPOS = head upos,
    XPOS = chunk type, MISC records the head's token id."""
    tokens = []
    for node in ctree.nodes:
        parent, label = ctree.arcs[node.ordinal]
        tokens.append(Token(node.ordinal, node.head_form, "_", node.head_upos, node.chunk_type,
                            "_", parent, label, "_", f"HeadId={node.head_token_id}"))
    return Sentence(tuple(tokens), sent_id, tuple(comments))


def sentence_to_ctree(sentence: Sentence) -> ChunkLevelTree:
    nodes, arcs = [], {}
    for tok in sentence.tokens:
        if tok.xpos not in CHUNK_TYPES:
            raise StructureError(f"row {tok.id}: XPOS {tok.xpos!r} is not a chunk type")
        head_id = tok.id
        for part in tok.misc.split("|"):
            if part.startswith("HeadId="):
                head_id = int(part[len("HeadId="):])
        nodes.append(ChunkNode(tok.id, tok.upos, tok.xpos, head_id, tok.form))
        arcs[tok.id] = (tok.head, tok.deprel)
    return ChunkLevelTree(tuple(nodes), arcs)
