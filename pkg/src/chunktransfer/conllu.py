"""Reading, validating and writing dependency treebanks in CoNLL-U format.

Only the basic-tree token layer is kept: multiword-token range lines
(``3-4``) and empty nodes (``5.1``) are dropped on input and counted as
warnings.  All other columns are carried verbatim so that writing a parsed
file reproduces it byte for byte.

Format reference: https://universaldependencies.org/format.html
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

logger = logging.getLogger(__name__)

UPOS_TAGS = (
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM",
    "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X",
)

# UD v2 universal (base) relations.
UD_RELATIONS = (
    "acl", "advcl", "advmod", "amod", "appos", "aux", "case", "cc", "ccomp",
    "clf", "compound", "conj", "cop", "csubj", "dep", "det", "discourse",
    "dislocated", "expl", "fixed", "flat", "goeswith", "iobj", "list", "mark",
    "nmod", "nsubj", "nummod", "obj", "obl", "orphan", "parataxis", "punct",
    "reparandum", "root", "vocative", "xcomp",
)


class ConlluError(Exception):
    """Base class for treebank errors."""


class ConlluParseError(ConlluError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class TreeValidationError(ConlluError):
    def __init__(self, sent_id: str, report: Sequence["Violation"]):
        self.sent_id = sent_id
        self.report = list(report)
        details = "; ".join(str(v) for v in self.report)
        super().__init__(f"sentence {sent_id or '<no id>'}: {details}")


@dataclass(frozen=True)
class Token:
    id: int
    form: str
    lemma: str = "_"
    upos: str = "_"
    xpos: str = "_"
    feats: str = "_"
    head: int = 0
    deprel: str = "_"
    deps: str = "_"
    misc: str = "_"

    @property
    def base_deprel(self) -> str:
        return base_relation(self.deprel)

    def to_line(self) -> str:
        return "\t".join((
            str(self.id), self.form, self.lemma, self.upos, self.xpos,
            self.feats, str(self.head), self.deprel, self.deps, self.misc,
        ))


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]
    sent_id: str = ""
    comments: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def token(self, token_id: int) -> Token:
        return self.tokens[token_id - 1]

    @property
    def heads(self) -> list[int]:
        return [t.head for t in self.tokens]

    @property
    def upos(self) -> list[str]:
        return [t.upos for t in self.tokens]

    def with_tokens(self, tokens: Iterable[Token]) -> "Sentence":
        return replace(self, tokens=tuple(tokens))


@dataclass(frozen=True)
class Violation:
    kind: str
    token_ids: tuple[int, ...]
    message: str

    def __str__(self) -> str:
        return f"{self.kind} {list(self.token_ids)}: {self.message}"


class Treebank(list):
    """A list of sentences that also remembers ingestion warnings."""

    def __init__(self, sentences: Iterable[Sentence] = (), warnings: Iterable[str] = ()):
        super().__init__(sentences)
        self.warnings: list[str] = list(warnings)


def base_relation(deprel: str) -> str:
    """Strip a language-specific subtype: ``nmod:poss`` -> ``nmod``."""
    return deprel.split(":", 1)[0]


def validate_tree(sentence: Sentence) -> list[Violation]:
    """Return every violated tree invariant; an empty list means valid."""
    report: list[Violation] = []
    tokens = sentence.tokens
    n = len(tokens)
    ids = [t.id for t in tokens]
    if ids != list(range(1, n + 1)):
        report.append(Violation("ids", tuple(ids), "token ids are not 1..n in order"))
        return report

    for tok in tokens:
        if tok.head < 0 or tok.head > n:
            report.append(Violation("head-range", (tok.id,), f"head {tok.head} outside 0..{n}"))
        elif tok.head == tok.id:
            report.append(Violation("self-loop", (tok.id,), "token is its own head"))
        if tok.deprel in ("", "_"):
            report.append(Violation("deprel", (tok.id,), "missing dependency relation"))
    if report:
        return report

    roots = [t.id for t in tokens if t.head == 0]
    if not roots:
        report.append(Violation("no-root", (), "no token attaches to the root"))
    elif len(roots) > 1:
        report.append(Violation("multiple-roots", tuple(roots), "more than one root attachment"))
    for rid in roots:
        if base_relation(tokens[rid - 1].deprel) != "root":
            report.append(Violation("root-deprel", (rid,), "root attachment not labelled 'root'"))
    for tok in tokens:
        if tok.head != 0 and base_relation(tok.deprel) == "root":
            report.append(Violation("root-deprel", (tok.id,), "'root' used on a non-root attachment"))

    heads = [0] + [t.head for t in tokens]
    for cycle in _find_cycles(heads):
        report.append(Violation("cycle", cycle, "head pointers form a cycle"))
    return report


def _find_cycles(heads: Sequence[int]) -> list[tuple[int, ...]]:
    # heads[0] is a dummy for the artificial root
    n = len(heads) - 1
    state = [0] * (n + 1)  # 0 unvisited, 1 on current path, 2 done
    cycles = []
    for start in range(1, n + 1):
        path = []
        node = start
        while node != 0 and state[node] == 0:
            state[node] = 1
            path.append(node)
            node = heads[node]
        if node != 0 and state[node] == 1:
            cycles.append(tuple(sorted(path[path.index(node):])))
        for p in path:
            state[p] = 2
    return cycles


def check_sentence(sentence: Sentence) -> Sentence:
    report = validate_tree(sentence)
    if report:
        raise TreeValidationError(sentence.sent_id, report)
    return sentence


def _parse_int(value: str, what: str, lineno: int) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConlluParseError(f"non-integer {what} {value!r}", lineno) from None


def _build_sentence(comments: list[str], tokens: list[Token]) -> Sentence:
    sent_id = ""
    for c in comments:
        key, sep, value = c[1:].partition("=")
        if sep and key.strip() == "sent_id":
            sent_id = value.strip()
            break
    return Sentence(tuple(tokens), sent_id, tuple(comments))


def parse_conllu(text: str, strict: bool = True) -> Treebank:
    """Parse CoNLL-U text into validated sentences.

    With ``strict`` an invalid tree raises :class:`TreeValidationError`;
    otherwise the sentence is skipped and a warning recorded.
    """
    treebank = Treebank()
    comments: list[str] = []
    tokens: list[Token] = []
    start_line = 1

    def flush():
        if not tokens:
            if comments:
                raise ConlluParseError("comment block without tokens", start_line)
            return
        sentence = _build_sentence(comments, tokens)
        report = validate_tree(sentence)
        if report:
            err = TreeValidationError(sentence.sent_id or f"starting at line {start_line}", report)
            if strict:
                raise err
            treebank.warnings.append(f"skipped invalid sentence: {err}")
            logger.warning("event=skip_sentence reason=%r", str(err))
            return
        treebank.append(sentence)

    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    for lineno, raw in enumerate(lines, start=1):
        line = raw[:-1] if raw.endswith("\r") else raw
        if not line.strip():
            flush()
            comments, tokens = [], []
            start_line = lineno + 1
            continue
        if line.startswith("#"):
            if tokens:
                raise ConlluParseError("comment line inside token block", lineno)
            comments.append(line)
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise ConlluParseError(f"expected 10 tab-separated columns, got {len(cols)}", lineno)
        if "-" in cols[0] or "." in cols[0]:
            kind = "multiword range" if "-" in cols[0] else "empty node"
            treebank.warnings.append(f"line {lineno}: dropped {kind} {cols[0]}")
            logger.debug("event=drop_line line=%d id=%s", lineno, cols[0])
            continue
        tid = _parse_int(cols[0], "token id", lineno)
        head = _parse_int(cols[6], "head", lineno)
        tokens.append(Token(tid, cols[1], cols[2], cols[3], cols[4], cols[5],
                            head, cols[7], cols[8], cols[9]))
    flush()
    return treebank


def write_conllu(sentences: Iterable[Sentence]) -> str:
    out = []
    for sentence in sentences:
        check_sentence(sentence)
        out.extend(sentence.comments)
        out.extend(t.to_line() for t in sentence.tokens)
        out.append("")
    return "".join(line + "\n" for line in out)


def read_treebank(path: str | Path, strict: bool = False) -> Treebank:
    text = Path(path).read_text(encoding="utf-8")
    try:
        return parse_conllu(text, strict=strict)
    except ConlluParseError as err:
        raise ConlluParseError(f"{path}: {err}") from err


def write_treebank(path: str | Path, sentences: Iterable[Sentence]) -> None:
    Path(path).write_text(write_conllu(sentences), encoding="utf-8")


def misc_items(misc: str) -> list[tuple[str, str]]:
    if misc in ("", "_"):
        return []
    return [tuple(part.partition("=")[::2]) for part in misc.split("|")]


def update_misc(misc: str, values: dict[str, str], drop_prefix: str | None = None) -> str:
    """Set MISC keys, keeping unrelated entries verbatim and in order."""
    parts = []
    if misc not in ("", "_"):
        for part in misc.split("|"):
            key = part.partition("=")[0]
            if key in values or (drop_prefix and key.startswith(drop_prefix)):
                continue
            parts.append(part)
    parts.extend(f"{k}={v}" for k, v in values.items())
    return "|".join(parts) if parts else "_"


def make_sentence(rows: Sequence[tuple], sent_id: str = "") -> Sentence:
    """Build a sentence from ``(form, upos, head, deprel)`` rows; handy in tests."""
    tokens = tuple(Token(i, form, "_", upos, "_", "_", head, deprel)
                   for i, (form, upos, head, deprel) in enumerate(rows, start=1))
    comments = (f"# sent_id = {sent_id}",) if sent_id else ()
    return Sentence(tokens, sent_id, comments)
