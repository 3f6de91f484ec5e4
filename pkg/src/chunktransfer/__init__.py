"""Chunk-guided cross-lingual transfer of dependency parsers."""

__version__ = "0.1.0"

from .chunks import ChunkSpan, classify_relation, derive_chunks
from .conllu import Sentence, Token, parse_conllu, read_treebank, write_conllu, write_treebank
from .tree_transform import collapse_tree, expand_tree

__all__ = [
    "ChunkSpan", "Sentence", "Token", "classify_relation", "collapse_tree", "derive_chunks",
    "expand_tree", "parse_conllu", "read_treebank", "write_conllu", "write_treebank",
]
