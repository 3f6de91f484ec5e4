import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chunktransfer.chunks import ChunkSpan, derive_chunks
from chunktransfer.conllu import make_sentence, parse_conllu, validate_tree, write_conllu
from chunktransfer.synthetic import flat_chunk_sentence, random_sentence
from chunktransfer.tree_transform import (ChunkLevelTree, StructureError, collapse_tree, ctree_nodes,
                                          ctree_to_sentence, expand_tree, sentence_to_ctree)


def test_collapse_table1(table1):
    chunks, _ = derive_chunks(table1)
    ctree = collapse_tree(table1, chunks)
    assert [(n.head_form, n.chunk_type, n.head_upos) for n in ctree.nodes] == [
        ("cat", "NP", "NOUN"), ("ate", "VP", "VERB"), ("mouse", "NP", "NOUN")]
    assert ctree.arcs == {1: (2, "nsubj"), 2: (0, "root"), 3: (2, "obj")}


def test_collapse_singletons_is_identity():
    s = make_sentence([("a", "NOUN", 2, "nsubj"), ("b", "VERB", 0, "root"), ("c", "NOUN", 2, "obj:lvc")])
    ctree = collapse_tree(s, derive_chunks(s)[0])
    assert ctree.heads == s.heads
    assert ctree.labels == [t.deprel for t in s.tokens]


def test_collapse_random_projective_arcs_link_heads():
    rng = random.Random(11)
    for _ in range(200):
        s = random_sentence(7, rng, projective=True)
        chunks, _ = derive_chunks(s)
        ctree = collapse_tree(s, chunks)
        assert len(ctree) == len(chunks)
        heads = {c.ordinal: c.head for c in chunks}
        for ordinal, (parent, label) in ctree.arcs.items():
            tok = s.token(heads[ordinal])
            if parent == 0:
                assert tok.head == 0
            elif not chunks[ordinal - 1].promoted:
                assert tok.head == heads[parent] and tok.deprel == label


def test_collapse_rejects_misuse(table1):
    # claim "white" heads a chunk but attach it into another chunk's non-head
    bad = [ChunkSpan(1, 1, "BLK", 1, 1), ChunkSpan(2, 2, "JJP", 2, 2), ChunkSpan(3, 4, "VP", 4, 3),
           ChunkSpan(5, 7, "NP", 7, 4)]
    with pytest.raises(StructureError, match="token 3"):
        collapse_tree(table1, bad)
    with pytest.raises(StructureError):
        collapse_tree(table1, [ChunkSpan(1, 3, "NP", 3, 1)])  # does not cover the sentence


def test_expand_french_example(french):
    chunks = [ChunkSpan(1, 3, "NP", 2, 1), ChunkSpan(4, 5, "VP", 5, 2), ChunkSpan(6, 8, "NP", 8, 3)]
    ctree = ChunkLevelTree(ctree_nodes(french.tokens, chunks), {1: (2, "nsubj"), 2: (0, "root"), 3: (2, "obj")})
    out = expand_tree(ctree, chunks, french.tokens, french.sent_id, french.comments)
    got = {t.form: (out.token(t.head).form if t.head else "ROOT", t.deprel) for t in out.tokens}
    assert got == {
        "Le": ("chat", "dep"), "chat": ("mange", "nsubj"), "blanc": ("chat", "dep"),
        "a": ("mange", "dep"), "mange": ("ROOT", "root"),
        "une": ("souris", "dep"), "petit": ("souris", "dep"), "souris": ("mange", "obj"),
    }
    assert [t.form for t in out.tokens] == [t.form for t in french.tokens]
    assert out.comments == french.comments


def test_expand_singletons_returns_chunk_arcs():
    s = make_sentence([("a", "NOUN", 2, "nsubj"), ("b", "VERB", 0, "root"), ("c", "NOUN", 2, "obj")])
    chunks, _ = derive_chunks(s)
    ctree = ChunkLevelTree(ctree_nodes(s.tokens, chunks), {1: (0, "root"), 2: (1, "acl"), 3: (2, "obj")})
    out = expand_tree(ctree, chunks, s.tokens)
    assert out.heads == [0, 1, 2] and [t.deprel for t in out.tokens] == ["root", "acl", "obj"]


def test_expand_mismatch_errors(table1):
    chunks, _ = derive_chunks(table1)
    ctree = collapse_tree(table1, chunks)
    with pytest.raises(StructureError):
        expand_tree(ctree, chunks[:2], table1.tokens)
    with pytest.raises(StructureError):
        expand_tree(ctree.with_arcs([2, 0, 1], ["x", "root", "y"]), chunks, table1.tokens[:5])
    with pytest.raises(StructureError, match="root"):
        expand_tree(ctree.with_arcs([0, 0, 2], ["root", "root", "obj"]), chunks, table1.tokens)
    with pytest.raises(StructureError, match="cycle"):
        expand_tree(ctree.with_arcs([3, 0, 1], ["a", "root", "b"]), chunks, table1.tokens)


def test_chunk_level_conllu_round_trip(table1):
    ctree = collapse_tree(table1, derive_chunks(table1)[0])
    s = ctree_to_sentence(ctree, "t1")
    assert [t.xpos for t in s.tokens] == ["NP", "VP", "NP"]
    assert s.token(3).misc == "HeadId=7"
    [back] = parse_conllu(write_conllu([s]))
    assert sentence_to_ctree(back) == ctree


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 12), st.integers(0, 10**9))
def test_round_trip_on_flat_chunks(n_chunks, seed):
    s = flat_chunk_sentence(n_chunks, random.Random(seed))
    chunks, _ = derive_chunks(s)
    out = expand_tree(collapse_tree(s, chunks), chunks, s.tokens)
    assert out.heads == s.heads


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 25), st.integers(0, 10**9))
def test_expand_any_chunk_tree_is_valid(n, seed):
    rng = random.Random(seed)
    s = random_sentence(n, rng)
    chunks, _ = derive_chunks(s)
    # arbitrary chunk-level tree over the chunks
    m = len(chunks)
    order = list(range(1, m + 1))
    rng.shuffle(order)
    arcs = {order[0]: (0, "root")}
    for k in range(1, m):
        arcs[order[k]] = (order[rng.randrange(k)], "dep")
    out = expand_tree(ChunkLevelTree(ctree_nodes(s.tokens, chunks), arcs), chunks, s.tokens)
    assert validate_tree(out) == []
    assert [t.form for t in out.tokens] == [t.form for t in s.tokens]


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 25), st.integers(0, 10**9))
def test_round_trip_differs_only_inside_chunks(n, seed):
    s = random_sentence(n, random.Random(seed))
    chunks, _ = derive_chunks(s)
    out = expand_tree(collapse_tree(s, chunks), chunks, s.tokens)
    for c in chunks:
        if c.promoted:
            continue
        tok = out.token(c.head)
        assert (tok.head, tok.deprel) == (s.token(c.head).head, s.token(c.head).deprel)
    for g, p in zip(s.tokens, out.tokens):
        if g.head != p.head:
            # both the token and its gold parent sit in the same chunk, or the
            # token heads a chunk created by discontiguity repair
            owner = next(c for c in chunks if g.id in c)
            assert g.head in owner or (owner.promoted and owner.head == g.id)
