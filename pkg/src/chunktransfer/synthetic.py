"""Seeded generators for synthetic trees and UD-style treebanks.

Used by the test suite, the acceptance checks and the demo experiment.  The
treebank grammar builds clauses out of chunks whose internal words attach
to the chunk head (rarely to a neighbour) with intra-chunk relations.  ``head_final=True`` yields a verb-final, postpositional word order,
a stand-in for a syntactically distant target language.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence

from .chunks import chunk_type_of
from .conllu import UD_RELATIONS, UPOS_TAGS, Sentence, Token
from .tree_transform import ChunkLevelTree, ChunkNode


def random_tree(n: int, rng: random.Random) -> list[int]:
    """Uniform-ish random tree over 1..n (heads list, one root, maybe non-projective)."""
    order = list(range(1, n + 1))
    rng.shuffle(order)
    heads = [0] * (n + 1)
    for k, node in enumerate(order):
        heads[node] = 0 if k == 0 else order[rng.randrange(k)]
    return heads[1:]


def random_projective_tree(n: int, rng: random.Random) -> list[int]:
    """Random projective tree: each span picks a head and splits its sides recursively."""
    heads = [0] * (n + 1)

    def build(lo: int, hi: int, parent: int) -> None:
        if lo > hi:
            return
        h = rng.randint(lo, hi)
        heads[h] = parent
        # split each side into contiguous blocks hanging off h
        for a, b in ((lo, h - 1), (h + 1, hi)):
            start = a
            while start <= b:
                end = rng.randint(start, b)
                build(start, end, h)
                start = end + 1

    build(1, n, 0)
    return heads[1:]


def random_sentence(n: int, rng: random.Random, projective: bool = False, sent_id: str = "") -> Sentence:
    """Random tree with random UPOS tags and UD relations."""
    heads = random_projective_tree(n, rng) if projective else random_tree(n, rng)
    relations = [r for r in UD_RELATIONS if r != "root"]
    tokens = []
    for i, h in enumerate(heads, start=1):
        upos = rng.choice(UPOS_TAGS)
        deprel = "root" if h == 0 else rng.choice(relations)
        tokens.append(Token(i, f"w{i}", "_", upos, "_", "_", h, deprel))
    comments = (f"# sent_id = {sent_id}",) if sent_id else ()
    return Sentence(tuple(tokens), sent_id, comments)


def random_chunk_tree(n: int, rng: random.Random, projective: bool = True) -> ChunkLevelTree:
    """Chunk-level tree over n nodes with random head tags and inter-chunk relations."""
    heads = random_projective_tree(n, rng) if projective else random_tree(n, rng)
    nodes, arcs = [], {}
    for k, h in enumerate(heads, start=1):
        upos = rng.choice(UPOS_TAGS)
        nodes.append(ChunkNode(k, upos, chunk_type_of(upos), k, f"w{k}"))
        arcs[k] = (h, "root" if h == 0 else rng.choice(_INTER_RELATIONS))
    return ChunkLevelTree(tuple(nodes), arcs)


_INTER_RELATIONS = ("nsubj", "obj", "iobj", "obl", "conj", "cc", "advcl", "ccomp", "nmod", "punct")


# -- treebank grammar ------------------------------------------------------

# chunk templates: (weight, [(upos, relation)]).  The relation attaches the word
# to the chunk head, or is (relation, offset) to attach to a neighbour; None
# marks the head itself.
_NP = [
    (30, [("DET", "det"), ("NOUN", None)]),
    (14, [("NOUN", None)]),
    (14, [("PRON", None)]),
    (10, [("DET", "det"), ("ADJ", "amod"), ("NOUN", None)]),
    (7, [("PROPN", None)]),
    (5, [("PROPN", None), ("PROPN", "flat")]),
    (4, [("NUM", "nummod"), ("NOUN", None)]),
    (3, [("DET", "det"), ("NOUN", "compound"), ("NOUN", None)]),
    (3, [("ADJ", "amod"), ("NOUN", None)]),
    (2, [("DET", "det"), ("ADJ", "amod"), ("ADJ", "amod"), ("NOUN", None)]),
    (2, [("DET", "det"), ("NUM", "nummod"), ("ADJ", "amod"), ("NOUN", None)]),
    (1, [("DET", "det"), ("PROPN", None)]),
    (1, [("NOUN", "compound"), ("NOUN", None)]),
    # "very" modifies the adjective, not the noun
    (1, [("DET", "det"), ("ADV", ("advmod", 1)), ("ADJ", "amod"), ("NOUN", None)]),
]
_VP = [
    (40, [("VERB", None)]),
    (15, [("AUX", "aux"), ("VERB", None)]),
    (6, [("AUX", None)]),
    (4, [("AUX", "aux"), ("AUX", "aux"), ("VERB", None)]),
    (3, [("AUX", "aux"), ("ADV", "advmod"), ("VERB", None)]),
    (2, [("PART", "advmod"), ("VERB", None)]),
]
_JJP = [(6, [("ADJ", None)]), (2, [("ADV", "advmod"), ("ADJ", None)])]
_RBP = [(6, [("ADV", None)]), (1, [("ADV", "advmod"), ("ADV", None)])]


def _pick(rng: random.Random, table):
    total = sum(w for w, _ in table)
    r = rng.uniform(0, total)
    for w, item in table:
        r -= w
        if r <= 0:
            return item
    return table[-1][1]


@dataclass
class _Chunk:
    words: list  # [(upos, rel or None)]
    rel: str = "root"
    parent: "_Chunk | None" = None
    case: bool = False


class TreebankGenerator:
    """Clause grammar producing UD-style sentences with flat chunks."""

    def __init__(self, seed: int = 0, head_final: bool = False, max_depth: int = 2):
        self.rng = random.Random(seed)
        self.head_final = head_final
        self.max_depth = max_depth

    def _np(self, parent, rel, case=False):
        words = list(_pick(self.rng, _NP))
        if case:
            adp = ("ADP", "case")
            words = words + [adp] if self.head_final else [adp] + words
        return _Chunk(words, rel, parent, case)

    def _clause(self, parent, rel, depth):
        rng = self.rng
        verb = _Chunk(list(_pick(rng, _VP)), rel, parent)
        left, right = [], []
        subj = self._np(verb, "nsubj") if rng.random() < 0.85 else None
        obj = self._np(verb, "obj") if rng.random() < 0.55 else None
        iobj = self._np(verb, "iobj") if obj and rng.random() < 0.1 else None
        obls = [self._np(verb, "obl", case=True) for _ in range(rng.choice((0, 0, 1, 1, 2)))]
        # an adverb on a nominal ("only John") stays a chunk of its own
        adv = _Chunk(list(_pick(rng, _RBP)), "advmod", subj) if subj and rng.random() < 0.2 else None
        pred = _Chunk(list(_pick(rng, _JJP)), "xcomp", verb) if not obj and rng.random() < 0.15 else None
        nmod = None
        if obj and rng.random() < 0.25:
            nmod = self._np(obj, "nmod", case=True)

        def np_block(np):
            if np is None:
                return []
            block = [np]
            if np is obj and nmod is not None:
                block = block + [nmod] if not self.head_final else [nmod] + block
            return block

        subj_b = ([adv] if adv else []) + np_block(subj)
        obj_b = (np_block(iobj) if iobj else []) + np_block(obj)
        if self.head_final:
            left = subj_b + sum((np_block(o) for o in obls), []) + obj_b + ([pred] if pred else [])
            seq = left + [verb]
        else:
            right = obj_b + ([pred] if pred else []) + sum((np_block(o) for o in obls), [])
            seq = subj_b + [verb] + right

        if depth < self.max_depth and rng.random() < 0.25:
            cc = _Chunk([("CCONJ", None)], "cc", None)
            conj_seq, conj_verb = self._clause(verb, "conj", depth + 1)
            cc.parent = conj_verb
            seq = seq + [cc] + conj_seq
        elif depth < self.max_depth and rng.random() < 0.15:
            mark = _Chunk([("SCONJ", None)], "mark", None)
            sub_seq, sub_verb = self._clause(verb, "advcl", depth + 1)
            mark.parent = sub_verb
            if self.head_final:
                seq = sub_seq + [mark] + seq
            else:
                seq = seq + [mark] + sub_seq
        return seq, verb

    def sentence(self, sent_id: str = "") -> Sentence:
        seq, root = self._clause(None, "root", 0)
        seq = seq + [_Chunk([("PUNCT", None)], "punct", root)]
        # number the words and remember each chunk's head id
        head_id = {}
        pos = 0
        for chunk in seq:
            for k, (_, rel) in enumerate(chunk.words):
                pos += 1
                if rel is None:
                    head_id[id(chunk)] = pos
        tokens = []
        pos = 0
        for chunk in seq:
            h = head_id[id(chunk)]
            for upos, rel in chunk.words:
                pos += 1
                if rel is None:
                    parent = 0 if chunk.parent is None else head_id[id(chunk.parent)]
                    rel = chunk.rel
                elif isinstance(rel, tuple):
                    rel, offset = rel
                    parent = pos + offset
                else:
                    parent = h
                tokens.append(Token(pos, f"{upos.lower()}{pos}", "_", upos, "_", "_", parent, rel))
        comments = (f"# sent_id = {sent_id}",) if sent_id else ()
        return Sentence(tuple(tokens), sent_id, comments)

    def treebank(self, size: int, prefix: str = "s") -> list[Sentence]:
        return [self.sentence(f"{prefix}-{i + 1}") for i in range(size)]


def generate_treebank(size: int, seed: int = 0, head_final: bool = False, prefix: str = "s") -> list[Sentence]:
    return TreebankGenerator(seed, head_final).treebank(size, prefix)


def flat_chunk_sentence(n_chunks: int, rng: random.Random, max_extra: int = 3) -> Sentence:
    """Random projective chunk structure whose non-head words attach straight
    to their chunk head by unconditional intra-chunk relations."""
    intra = ("det", "case", "aux", "nummod", "compound", "flat", "fixed", "appos", "goeswith")
    inter = [r for r in UD_RELATIONS if r not in intra and r not in ("root", "amod", "advmod")]
    chunk_heads = random_projective_tree(n_chunks, rng)
    layout = []  # (n_left, n_right) per chunk
    for _ in range(n_chunks):
        extra = rng.randint(0, max_extra)
        left = rng.randint(0, extra)
        layout.append((left, extra - left))
    head_pos, pos = [], 0
    for left, right in layout:
        head_pos.append(pos + left + 1)
        pos += left + right + 1
    tokens = []
    for k, (left, right) in enumerate(layout):
        hp = head_pos[k]
        parent = chunk_heads[k]
        for i in range(hp - left, hp + right + 1):
            upos = rng.choice(UPOS_TAGS)
            if i == hp:
                head = 0 if parent == 0 else head_pos[parent - 1]
                rel = "root" if parent == 0 else rng.choice(inter)
            else:
                head, rel = hp, rng.choice(intra)
            tokens.append(Token(i, f"w{i}", "_", upos, "_", "_", head, rel))
    return Sentence(tuple(tokens))


def pattern_corpus(size: int, rng: random.Random, max_chunks: int = 4) -> list[tuple[list[str], list[str]]]:
    """Tiny chunking corpus: NP = DET ADJ* NOUN, VP = VERB."""
    out = []
    for _ in range(size):
        tags, labels = [], []
        for _ in range(rng.randint(1, max_chunks)):
            if rng.random() < 0.5:
                chunk = ["DET"] + ["ADJ"] * rng.randint(0, 3) + ["NOUN"]
                tags += chunk
                labels += ["B-NP"] + ["I-NP"] * (len(chunk) - 1)
            else:
                tags.append("VERB")
                labels.append("B-VP")
        out.append((tags, labels))
    return out


def heads_to_sentence(heads: Sequence[int], upos: Sequence[str], labels: Sequence[str]) -> Sentence:
    tokens = tuple(Token(i, f"w{i}", "_", u, "_", "_", h, l)
                   for i, (h, u, l) in enumerate(zip(heads, upos, labels), start=1))
    return Sentence(tokens)


def pattern_inventory(size: int, rng: random.Random) -> list[tuple[tuple[str, ...], str]]:
    """Random chunk templates: 1-4 UPOS tags, typed by a randomly placed head."""
    inventory, seen = [], set()
    while len(inventory) < size:
        tags = tuple(rng.choice(UPOS_TAGS) for _ in range(rng.choice((1, 2, 2, 3, 3, 4))))
        if tags in seen:
            continue
        seen.add(tags)
        inventory.append((tags, chunk_type_of(tags[rng.randrange(len(tags))])))
    return inventory


def zipf_pattern_corpus(inventory, size: int, rng: random.Random,
                        exponent: float = 1.0) -> list[tuple[list[str], list[str]]]:
    """Sentences of 3-8 templates drawn with Zipfian frequencies, so small
    samples miss the rarer templates."""
    weights = [1.0 / (k + 1) ** exponent for k in range(len(inventory))]
    out = []
    for _ in range(size):
        tags, labels = [], []
        for pattern, ctype in rng.choices(inventory, weights=weights, k=rng.randint(3, 8)):
            tags.extend(pattern)
            labels.extend([f"B-{ctype}"] + [f"I-{ctype}"] * (len(pattern) - 1))
        out.append((tags, labels))
    return out
