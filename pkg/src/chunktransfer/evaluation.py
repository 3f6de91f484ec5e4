"""Attachment scores, chunking and head-identification accuracy, report tables."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Collection, Mapping, Optional, Sequence, Union

from .chunks import ChunkSpan
from .conllu import Sentence, Token, base_relation
from .tree_transform import INTRA_PLACEHOLDER

CONDITIONS = ("baseline", "predicted_chunks", "gold_chunks")
NA = "n/a"
_SUMMARY_ROWS = ("Avg", "Gold chunk")

Mask = Union[Callable[[Token], bool], Collection[int], None]


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class ScoreReport:
    token_count: int
    correct_heads: int
    correct_labeled: Optional[int] = None
    mask_name: str = "all"

    @property
    def uas(self) -> float:
        return self.correct_heads / self.token_count if self.token_count else 0.0

    @property
    def las(self) -> Optional[float]:
        if self.correct_labeled is None:
            return None
        return self.correct_labeled / self.token_count if self.token_count else 0.0

    def __add__(self, other: "ScoreReport") -> "ScoreReport":
        if self.mask_name != other.mask_name:
            raise EvaluationError(f"cannot add {self.mask_name} and {other.mask_name} scores")
        labeled = None
        if self.correct_labeled is not None and other.correct_labeled is not None:
            labeled = self.correct_labeled + other.correct_labeled
        return ScoreReport(self.token_count + other.token_count,
                           self.correct_heads + other.correct_heads, labeled, self.mask_name)


def _mask_fn(mask: Mask) -> Callable[[Token], bool]:
    if mask is None:
        return lambda tok: True
    if callable(mask):
        return mask
    ids = set(mask)
    return lambda tok: tok.id in ids


def inter_chunk_mask(gold_chunks: Sequence[ChunkSpan]) -> set[int]:
    """Token ids of the gold chunk heads."""
    return {c.head for c in gold_chunks}


def attachment_scores(gold: Sentence, pred: Sentence, mask: Mask = None, mask_name: str = "all",
                      exclude_punct: bool = False) -> ScoreReport:
    """UAS/LAS of ``pred`` against ``gold`` over the gold tokens selected by ``mask``.

    Labels are compared on base relations.  When ``mask_name`` is ``"all"``
    and the prediction carries placeholder intra-chunk labels, LAS is left
    undefined.
    """
    if len(gold) != len(pred):
        raise EvaluationError(f"token count mismatch: gold {len(gold)}, predicted {len(pred)}")
    for g, p in zip(gold.tokens, pred.tokens):
        if g.form != p.form:
            raise EvaluationError(f"token {g.id}: gold form {g.form!r} vs predicted {p.form!r}")
    keep = _mask_fn(mask)
    labeled = not (mask_name == "all" and any(t.deprel == INTRA_PLACEHOLDER for t in pred.tokens))
    count = heads = labels = 0
    for g, p in zip(gold.tokens, pred.tokens):
        if not keep(g) or (exclude_punct and g.upos == "PUNCT"):
            continue
        count += 1
        if g.head == p.head:
            heads += 1
            if base_relation(g.deprel) == base_relation(p.deprel):
                labels += 1
    return ScoreReport(count, heads, labels if labeled else None, mask_name)


def corpus_attachment_scores(golds: Sequence[Sentence], preds: Sequence[Sentence],
                             masks: Optional[Sequence[Mask]] = None, mask_name: str = "all",
                             exclude_punct: bool = False) -> ScoreReport:
    if len(golds) != len(preds):
        raise EvaluationError(f"{len(golds)} gold sentences but {len(preds)} predicted")
    total = ScoreReport(0, 0, 0, mask_name)
    for k, (g, p) in enumerate(zip(golds, preds)):
        total += attachment_scores(g, p, masks[k] if masks else None, mask_name, exclude_punct)
    return total


def chunk_label_accuracy(gold_labels: Sequence[Sequence[str]], pred_labels: Sequence[Sequence[str]]) -> float:
    """Micro-averaged exact label match over all tokens."""
    if len(gold_labels) != len(pred_labels):
        raise EvaluationError(f"{len(gold_labels)} gold sequences but {len(pred_labels)} predicted")
    correct = total = 0
    for k, (g, p) in enumerate(zip(gold_labels, pred_labels)):
        if len(g) != len(p):
            raise EvaluationError(f"sequence {k}: {len(g)} gold labels but {len(p)} predicted")
        correct += sum(a == b for a, b in zip(g, p))
        total += len(g)
    if not total:
        raise EvaluationError("no tokens to score")
    return correct / total


def head_identification_accuracy(gold_chunks: Sequence[Sequence[ChunkSpan]],
                                 predicted_heads: Sequence[Sequence[int]]) -> float:
    """Fraction of gold chunks whose head, predicted on the gold span, is right."""
    if len(gold_chunks) != len(predicted_heads):
        raise EvaluationError(f"{len(gold_chunks)} gold sentences but {len(predicted_heads)} predicted")
    correct = total = 0
    for k, (chunks, heads) in enumerate(zip(gold_chunks, predicted_heads)):
        if len(chunks) != len(heads):
            raise EvaluationError(f"sentence {k}: {len(chunks)} gold chunks but {len(heads)} heads")
        for chunk, head in zip(chunks, heads):
            if head not in chunk:
                raise EvaluationError(f"sentence {k}: head {head} outside span {chunk.start}-{chunk.end}")
            correct += head == chunk.head
            total += 1
    if not total:
        raise EvaluationError("no chunks to score")
    return correct / total


# -- report tables ----------------------------------------------------------

@dataclass
class Table:
    name: str
    title: str
    columns: list[str]
    rows: list[list[str]] = field(default_factory=list)

    def to_tsv(self) -> str:
        lines = ["\t".join(self.columns)] + ["\t".join(r) for r in self.rows]
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        widths = [max(len(row[i]) for row in [self.columns, *self.rows]) for i in range(len(self.columns))]

        def fmt(row):
            return "  ".join(cell.ljust(w) if i == 0 else cell.rjust(w)
                             for i, (cell, w) in enumerate(zip(row, widths))).rstrip()

        rule = "-" * len(fmt(self.columns))
        body = [fmt(r) for r in self.rows]
        split = next((i for i, r in enumerate(self.rows) if r[0] in _SUMMARY_ROWS), None)
        if split:
            body.insert(split, rule)
        return "\n".join([self.title, rule, fmt(self.columns), rule, *body, rule]) + "\n"


@dataclass
class ReportDocument:
    tables: list[Table]

    def to_text(self) -> str:
        return "\n".join(t.to_text() for t in self.tables)

    def tsv_files(self) -> dict[str, str]:
        return {f"{t.name}.tsv": t.to_tsv() for t in self.tables}


@dataclass
class LanguageResult:
    """Scores for one target language; any value may be missing (None)."""

    head_accuracy: Optional[float] = None
    full: dict[str, Optional[ScoreReport]] = field(default_factory=dict)
    inter: dict[str, Optional[ScoreReport]] = field(default_factory=dict)


def _pct(value: Optional[float]) -> str:
    return NA if value is None else f"{100 * value:.1f}"


def _mean(values: Sequence[Optional[float]]) -> Optional[float]:
    if not values or any(v is None for v in values):
        return None
    return sum(values) / len(values)


def _uas(report: Optional[ScoreReport]) -> Optional[float]:
    return None if report is None else report.uas


def _las(report: Optional[ScoreReport]) -> Optional[float]:
    return None if report is None else report.las


def _lang_tables(name_full: str, name_inter: str, source: str,
                 per_language: Mapping[str, LanguageResult]) -> list[Table]:
    langs = list(per_language)
    full = Table(name_full, f"Full-tree UAS, {source} as source",
                 ["Lang", "UAS with full tree transfer", "UAS with predicted chunks", "UAS with gold chunks"])
    for l in langs:
        full.rows.append([l] + [_pct(_uas(per_language[l].full.get(c))) for c in CONDITIONS])
    full.rows.append(["Avg"] + [_pct(_mean([_uas(per_language[l].full.get(c)) for l in langs]))
                                for c in CONDITIONS])

    inter = Table(name_inter, f"Inter-chunk relations only (UAS/LAS), {source} as source",
                  ["Lang", "Full tree transfer U", "Full tree transfer L",
                   "Predicted chunk transfer U", "Predicted chunk transfer L",
                   "Gold chunk transfer U", "Gold chunk transfer L"])
    for l in langs:
        row = [l]
        for c in CONDITIONS:
            rep = per_language[l].inter.get(c)
            row += [_pct(_uas(rep)), _pct(_las(rep))]
        inter.rows.append(row)
    avg = ["Avg"]
    for c in CONDITIONS:
        avg.append(_pct(_mean([_uas(per_language[l].inter.get(c)) for l in langs])))
        avg.append(_pct(_mean([_las(per_language[l].inter.get(c)) for l in langs])))
    inter.rows.append(avg)
    return [full, inter]


def build_report_tables(results: Mapping[str, Mapping[str, LanguageResult]],
                        sweep_accuracy: Optional[Mapping[int, Mapping[str, Optional[float]]]] = None,
                        sweep_uas: Optional[Mapping[str, Mapping[int, Mapping[str, Optional[float]]]]] = None,
                        ) -> ReportDocument:
    """Assemble the result tables.

    ``results`` maps source language to ``{target: LanguageResult}``.
    ``sweep_accuracy`` maps chunker training size to ``{target: chunk_acc}``
    and ``sweep_uas`` maps source to ``{size: {target: full_uas}}``.  Every
    missing value prints as ``n/a``; an average is ``n/a`` as soon as one of
    its rows is.  Head accuracy does not depend on the source, so it is
    taken from the first source.
    """
    if not results or not all(results.values()):
        raise EvaluationError("empty result grid")
    sources = list(results)
    first = results[sources[0]]
    langs = list(first)
    tables = []

    if sweep_accuracy:
        t = Table("table2_size_sweep",
                  f"Chunker training size sweep, averaged over {len(langs)} target languages",
                  ["Training set size", "Avg. chunking acc.(%)"] + [f"Avg. UAS ({s} as src.)" for s in sources])
        for size in sorted(sweep_accuracy):
            row = [str(size), _pct(_mean([sweep_accuracy[size].get(l) for l in langs]))]
            for s in sources:
                cells = (sweep_uas or {}).get(s, {}).get(size, {})
                row.append(_pct(_mean([cells.get(l) for l in results[s]])))
            t.rows.append(row)
        t.rows.append(["Gold chunk", _pct(1.0)] +
                      [_pct(_mean([_uas(r.full.get("gold_chunks")) for r in results[s].values()]))
                       for s in sources])
        t.rows.append(["Full tree", "_"] +
                      [_pct(_mean([_uas(r.full.get("baseline")) for r in results[s].values()]))
                       for s in sources])
        tables.append(t)

    t = Table("table3_head_accuracy", "Chunk head identification accuracy on gold chunks",
              ["Language", "Chunk head identification accuracy"])
    for l in langs:
        t.rows.append([l, _pct(first[l].head_accuracy)])
    t.rows.append(["Avg", _pct(_mean([first[l].head_accuracy for l in langs]))])
    tables.append(t)

    for k, s in enumerate(sources):
        n = 4 + 2 * k
        tables += _lang_tables(f"table{n}_full_tree_uas_{s}", f"table{n + 1}_inter_chunk_{s}", s, results[s])
    return ReportDocument(tables)
