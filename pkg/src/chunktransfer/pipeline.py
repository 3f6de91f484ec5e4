"""Sentence-level steps of chunk-level transfer and of the word-level baseline."""
from __future__ import annotations

from dataclasses import replace
from typing import Callable, Sequence

from .chunker import ChunkerModel, decode_spans, predict_labels
from .chunks import ChunkSpan, annotate_sentence, derive_chunks
from .conllu import Sentence, check_sentence
from .head_rules import HeadRuleSet, identify_head
from .parser import NO_CHUNK, ParserModel, parse
from .tree_transform import ChunkLevelTree, ctree_nodes, expand_tree

ParseFn = Callable[[Sequence[tuple[str, str]]], list[tuple[int, str]]]


class ModelMismatchError(ValueError):
    pass


def parser_fn(model: ParserModel, level: str, beam_width: int = 1) -> ParseFn:
    if model.level != level:
        raise ModelMismatchError(f"parser model was trained on {model.level}-level trees, "
                                 f"{level}-level parsing requested")
    return lambda nodes: parse(model, nodes, beam_width)


def gold_chunks(sentence: Sentence) -> list[ChunkSpan]:
    return derive_chunks(sentence)[0]


def predict_chunks(sentence: Sentence, chunker: ChunkerModel, rules: HeadRuleSet) -> tuple[list[ChunkSpan], list[str]]:
    upos = sentence.upos
    labels = predict_labels(chunker, upos)
    return decode_spans(labels, upos, rules), labels


def heads_on_spans(sentence: Sentence, chunks: Sequence[ChunkSpan], rules: HeadRuleSet) -> list[int]:
    """Rule-predicted head of each given span (used on gold spans)."""
    return [identify_head([(t, sentence.token(t).upos) for t in c.token_ids], c.chunk_type, rules)
            for c in chunks]


def transfer_sentence(sentence: Sentence, chunks: Sequence[ChunkSpan], parse_fn: ParseFn,
                      annotate: bool = True) -> Sentence:
    """Parse the chunk-head sequence and expand the chunks into a full tree."""
    nodes = ctree_nodes(sentence.tokens, chunks)
    arcs = parse_fn([(n.head_upos, n.chunk_type) for n in nodes])
    ctree = ChunkLevelTree(nodes, {n.ordinal: arc for n, arc in zip(nodes, arcs)})
    out = expand_tree(ctree, chunks, sentence.tokens, sentence.sent_id, sentence.comments)
    return annotate_sentence(out, chunks) if annotate else out


def baseline_sentence(sentence: Sentence, parse_fn: ParseFn) -> Sentence:
    """Word-level transfer: parse the UPOS sequence directly."""
    arcs = parse_fn([(t.upos, NO_CHUNK) for t in sentence.tokens])
    tokens = [replace(t, head=h, deprel=l) for t, (h, l) in zip(sentence.tokens, arcs)]
    return check_sentence(sentence.with_tokens(tokens))
