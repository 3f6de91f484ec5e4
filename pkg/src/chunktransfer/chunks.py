"""Gold chunk derivation from dependency trees.

Relations are split into intra-chunk and inter-chunk classes.  A chunk is a
chunk head together with every token it reaches through intra-chunk
attachments; the subtree under an intra-chunk attachment is absorbed whole.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Sequence

from .conllu import Sentence, check_sentence, misc_items, update_misc

CHUNK_TYPES = ("NP", "VP", "JJP", "RBP", "CCP", "BLK")

INTRA_RELATIONS = frozenset({
    "aux", "appos", "nummod", "det", "case", "fixed", "flat", "compound", "goeswith",
})
AMOD_PARENTS = frozenset({"NOUN", "PROPN", "PRON", "ADJ", "ADV"})
ADVMOD_PARENTS = frozenset({"VERB", "AUX", "ADV", "ADJ"})

_TYPE_OF_UPOS = {
    "NOUN": "NP", "PROPN": "NP", "PRON": "NP",
    "VERB": "VP", "AUX": "VP",
    "ADJ": "JJP",
    "ADV": "RBP",
    "CCONJ": "CCP", "SCONJ": "CCP",
}


class RelationClass(enum.Enum):
    INTRA = "Intra"
    INTER = "Inter"


class ChunkError(ValueError):
    pass


@dataclass(frozen=True)
class ChunkSpan:
    """A contiguous run of tokens ``start..end`` (inclusive, 1-based ids)."""

    start: int
    end: int
    chunk_type: str
    head: int
    ordinal: int
    # set when the head was created by discontiguity repair
    promoted: bool = False

    def __post_init__(self):
        if not self.start <= self.head <= self.end:
            raise ChunkError(f"head {self.head} outside span {self.start}-{self.end}")
        if self.chunk_type not in CHUNK_TYPES:
            raise ChunkError(f"unknown chunk type {self.chunk_type!r}")

    def __contains__(self, token_id: int) -> bool:
        return self.start <= token_id <= self.end

    def __len__(self) -> int:
        return self.end - self.start + 1

    @property
    def token_ids(self) -> range:
        return range(self.start, self.end + 1)

    @property
    def labels(self) -> list[str]:
        return [f"B-{self.chunk_type}"] + [f"I-{self.chunk_type}"] * (len(self) - 1)


def classify_relation(deprel_base: str, parent_upos: str) -> RelationClass:
    if deprel_base in INTRA_RELATIONS:
        return RelationClass.INTRA
    if deprel_base == "amod" and parent_upos in AMOD_PARENTS:
        return RelationClass.INTRA
    if deprel_base == "advmod" and parent_upos in ADVMOD_PARENTS:
        return RelationClass.INTRA
    return RelationClass.INTER


def chunk_type_of(head_upos: str) -> str:
    return _TYPE_OF_UPOS.get(head_upos, "BLK")


def split_label(label: str) -> tuple[str, str]:
    """``"B-NP"`` -> ``("B", "NP")``."""
    boundary, sep, ctype = label.partition("-")
    if not sep or boundary not in ("B", "I") or ctype not in CHUNK_TYPES:
        raise ChunkError(f"malformed BI label {label!r}")
    return boundary, ctype


def label_runs(labels: Sequence[str]) -> list[tuple[int, int, str]]:
    """Decode a well-formed BI sequence into ``(start, end, type)`` runs (1-based)."""
    runs: list[list] = []
    for i, label in enumerate(labels, start=1):
        boundary, ctype = split_label(label)
        if boundary == "B":
            runs.append([i, i, ctype])
        else:
            if not runs or runs[-1][2] != ctype or runs[-1][1] != i - 1:
                raise ChunkError(f"{label} at position {i} does not continue a chunk")
            runs[-1][1] = i
    return [tuple(r) for r in runs]


def is_chunk_head(sentence: Sentence, token_id: int) -> bool:
    tok = sentence.token(token_id)
    if tok.head == 0:
        return True
    parent_upos = sentence.token(tok.head).upos
    return classify_relation(tok.base_deprel, parent_upos) is RelationClass.INTER


def _owners(heads: Sequence[int], is_head: Sequence[bool]) -> list[int]:
    # owner[t] = nearest ancestor-or-self that is a chunk head; index 0 unused
    n = len(heads) - 1
    owner = [0] * (n + 1)

    def resolve(t: int) -> int:
        path = []
        while not owner[t]:
            if is_head[t]:
                owner[t] = t
                break
            path.append(t)
            t = heads[t]
        for p in path:
            owner[p] = owner[t]
        return owner[t]

    for t in range(1, n + 1):
        resolve(t)
    return owner


def derive_chunks(sentence: Sentence) -> tuple[list[ChunkSpan], list[str]]:
    """Derive gold chunk spans and BI labels from a dependency tree.

    A token heads a chunk when every arc on its path from the root is
    inter-chunk.  Other tokens join the chunk of their nearest head
    ancestor.  If that leaves a chunk split by tokens of another chunk, the
    top node of each stray run is promoted to head its own chunk, repeating
    until every chunk is contiguous.  Promoted spans are flagged.
    """
    check_sentence(sentence)
    n = len(sentence)
    heads = [0] + sentence.heads
    inter = [False] + [is_chunk_head(sentence, t) for t in range(1, n + 1)]
    is_head = [False] * (n + 1)
    promoted = [False] * (n + 1)

    # heads reached through inter-chunk arcs only
    order = sorted(range(1, n + 1), key=lambda t: _depth(heads, t))
    for t in order:
        is_head[t] = inter[t] and (heads[t] == 0 or is_head[heads[t]])

    while True:
        owner = _owners(heads, is_head)
        to_promote = set()
        for t in range(1, n + 1):
            if owner[t] != t:
                continue
            members = [m for m in range(1, n + 1) if owner[m] == t]
            run_of = {}
            run = 0
            for i, m in enumerate(members):
                if i and m != members[i - 1] + 1:
                    run += 1
                run_of[m] = run
            head_run = run_of[t]
            for m in members:
                if run_of[m] != head_run and run_of.get(heads[m]) != run_of[m]:
                    to_promote.add(m)  # top node of a stray run
        if not to_promote:
            break
        for t in to_promote:
            is_head[t] = True
            promoted[t] = True

    owner = _owners(heads, is_head)
    spans: list[ChunkSpan] = []
    labels: list[str] = []
    t = 1
    while t <= n:
        h = owner[t]
        end = t
        while end + 1 <= n and owner[end + 1] == h:
            end += 1
        ctype = chunk_type_of(sentence.token(h).upos)
        spans.append(ChunkSpan(t, end, ctype, h, len(spans) + 1, promoted[h]))
        labels.extend(spans[-1].labels)
        t = end + 1
    return spans, labels


def _depth(heads: Sequence[int], t: int) -> int:
    d = 0
    while heads[t] != 0:
        t = heads[t]
        d += 1
    return d


def spans_from_labels(labels: Sequence[str], heads: Sequence[int]) -> list[ChunkSpan]:
    """Pair decoded BI runs with known head positions (one per run)."""
    runs = label_runs(labels)
    if len(runs) != len(heads):
        raise ChunkError(f"{len(runs)} chunks but {len(heads)} heads")
    return [ChunkSpan(s, e, ctype, h, i) for i, ((s, e, ctype), h) in enumerate(zip(runs, heads), 1)]


def chunk_of_token(chunks: Sequence[ChunkSpan], n: int) -> list[int]:
    """Map token id -> chunk ordinal (index 0 unused)."""
    index = [0] * (n + 1)
    for chunk in chunks:
        for t in chunk.token_ids:
            index[t] = chunk.ordinal
    return index


def annotate_sentence(sentence: Sentence, chunks: Sequence[ChunkSpan]) -> Sentence:
    """Write chunk annotations into MISC as ``Chunk=B-NP|ChunkOrd=1|ChunkHead=Yes``."""
    tokens = list(sentence.tokens)
    for chunk in chunks:
        for t, label in zip(chunk.token_ids, chunk.labels):
            tok = tokens[t - 1]
            misc = update_misc(tok.misc, {
                "Chunk": label,
                "ChunkOrd": str(chunk.ordinal),
                "ChunkHead": "Yes" if t == chunk.head else "No",
            }, drop_prefix="Chunk")
            tokens[t - 1] = replace(tok, misc=misc)
    return sentence.with_tokens(tokens)


def read_annotation(sentence: Sentence) -> list[ChunkSpan]:
    """Recover chunk spans from MISC annotations written by :func:`annotate_sentence`."""
    labels, heads = [], []
    for tok in sentence.tokens:
        misc = dict(misc_items(tok.misc))
        if "Chunk" not in misc:
            raise ChunkError(f"token {tok.id} of {sentence.sent_id or '<no id>'} has no Chunk annotation")
        labels.append(misc["Chunk"])
        if misc.get("ChunkHead") == "Yes":
            heads.append(tok.id)
    return spans_from_labels(labels, heads)
