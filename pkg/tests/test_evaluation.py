import pytest

from chunktransfer.chunks import ChunkSpan, derive_chunks
from chunktransfer.conllu import make_sentence
from chunktransfer.evaluation import (NA, EvaluationError, LanguageResult, ScoreReport, attachment_scores,
                                      build_report_tables, chunk_label_accuracy, corpus_attachment_scores,
                                      head_identification_accuracy, inter_chunk_mask)
from chunktransfer.head_rules import default_rules
from chunktransfer.pipeline import heads_on_spans

# gold: (the dog)NP (often barks)VP
GOLD = make_sentence([("the", "DET", 2, "det"), ("dog", "NOUN", 4, "nsubj"),
                      ("often", "ADV", 4, "advmod"), ("barks", "VERB", 0, "root")])
# heads right on 1, 2, 4; labels right on 1 and 4
PRED = make_sentence([("the", "DET", 2, "det"), ("dog", "NOUN", 4, "obj"),
                      ("often", "ADV", 2, "advmod"), ("barks", "VERB", 0, "root")])


def test_identity_scores(table1):
    rep = attachment_scores(table1, table1)
    assert (rep.uas, rep.las, rep.token_count) == (1.0, 1.0, 7)


def test_hand_counted_all_tokens():
    rep = attachment_scores(GOLD, PRED)
    assert (rep.correct_heads, rep.correct_labeled, rep.token_count) == (3, 2, 4)
    assert rep.uas == 0.75 and rep.las == 0.5


def test_placeholder_labels_drop_full_las():
    pred = make_sentence([("the", "DET", 2, "dep"), ("dog", "NOUN", 4, "obj"),
                          ("often", "ADV", 2, "advmod"), ("barks", "VERB", 0, "root")])
    rep = attachment_scores(GOLD, pred)
    assert rep.uas == 0.75 and rep.las is None
    # the inter-chunk view keeps LAS
    assert attachment_scores(GOLD, pred, {2, 4}, "inter_chunk").las is not None


def test_hand_counted_inter_chunk():
    mask = inter_chunk_mask(derive_chunks(GOLD)[0])
    assert mask == {2, 4}
    rep = attachment_scores(GOLD, PRED, mask, "inter_chunk")
    assert (rep.uas, rep.las, rep.token_count) == (1.0, 0.5, 2)


def test_subtypes_compared_on_base():
    pred = make_sentence([("the", "DET", 2, "det"), ("dog", "NOUN", 4, "nsubj:pass"),
                          ("often", "ADV", 4, "advmod"), ("barks", "VERB", 0, "root")])
    assert attachment_scores(GOLD, pred).las == 1.0


def test_callable_mask_and_punct():
    gold = make_sentence([("go", "VERB", 0, "root"), ("!", "PUNCT", 1, "punct")])
    pred = make_sentence([("go", "VERB", 2, "dep"), ("!", "PUNCT", 0, "root")])
    assert attachment_scores(gold, pred).uas == 0.0
    assert attachment_scores(gold, pred, lambda t: t.upos == "VERB").token_count == 1
    assert attachment_scores(gold, pred, exclude_punct=True).token_count == 1


def test_mismatch_errors(table1):
    with pytest.raises(EvaluationError, match="token count"):
        attachment_scores(GOLD, table1)
    other = make_sentence([("a", "DET", 2, "det"), ("dog", "NOUN", 4, "nsubj"),
                           ("often", "ADV", 4, "advmod"), ("barks", "VERB", 0, "root")])
    with pytest.raises(EvaluationError, match="form"):
        attachment_scores(GOLD, other)


def test_comments_do_not_matter():
    from dataclasses import replace
    noted = replace(PRED, comments=("# note = x",), sent_id="other")
    assert attachment_scores(GOLD, noted) == attachment_scores(GOLD, PRED)


def test_corpus_scores_sum_counts(table1):
    total = corpus_attachment_scores([GOLD, table1], [PRED, table1])
    assert (total.correct_heads, total.token_count) == (10, 11)
    assert total.las == 9 / 11
    with pytest.raises(EvaluationError):
        corpus_attachment_scores([GOLD], [])


def test_score_report_add():
    a = ScoreReport(4, 3, 2)
    assert (a + ScoreReport(2, 1, None)).correct_labeled is None
    with pytest.raises(EvaluationError):
        a + ScoreReport(1, 1, 1, "inter_chunk")
    assert ScoreReport(0, 0).uas == 0.0


def test_chunk_label_accuracy_examples():
    gold = [["B-NP", "I-NP", "B-VP", "B-NP", "I-NP"], ["B-NP", "B-VP", "B-NP", "I-NP", "B-BLK"]]
    assert chunk_label_accuracy(gold, gold) == 1.0
    pred = [list(gold[0]), list(gold[1])]
    pred[1][3] = "B-NP"  # I-NP vs B-NP at the same position is an error
    assert chunk_label_accuracy(gold, pred) == 0.9
    with pytest.raises(EvaluationError):
        chunk_label_accuracy(gold, [gold[0]])
    with pytest.raises(EvaluationError):
        chunk_label_accuracy([["B-NP"]], [["B-NP", "B-NP"]])


def test_head_accuracy_examples(table1):
    singles = [[ChunkSpan(i, i, "NP", i, i) for i in range(1, 4)]]
    assert head_identification_accuracy(singles, [[1, 2, 3]]) == 1.0
    ten = [[ChunkSpan(2 * i - 1, 2 * i, "NP", 2 * i, i) for i in range(1, 11)]]
    guesses = [[2 * i for i in range(1, 10)] + [19]]
    assert head_identification_accuracy(ten, guesses) == 0.9
    chunks = derive_chunks(table1)[0]
    assert head_identification_accuracy([chunks], [heads_on_spans(table1, chunks, default_rules())]) == 1.0


def test_head_accuracy_errors():
    chunk = [[ChunkSpan(1, 2, "NP", 2, 1)]]
    with pytest.raises(EvaluationError, match="outside"):
        head_identification_accuracy(chunk, [[3]])
    with pytest.raises(EvaluationError):
        head_identification_accuracy(chunk, [[1, 2]])
    with pytest.raises(EvaluationError):
        head_identification_accuracy([[]], [[]])


# -- report tables -------------------------------------------------------

def _r(tokens, heads, labeled=None, mask="all"):
    return ScoreReport(tokens, heads, labeled, mask)


def golden_grid():
    inter = "inter_chunk"
    results = {"en": {
        "fr": LanguageResult(0.95, {"baseline": _r(200, 150, 140), "predicted_chunks": _r(200, 160),
                                    "gold_chunks": _r(200, 170)},
                             {"baseline": _r(100, 70, 60, inter), "predicted_chunks": _r(100, 72, 61, inter),
                              "gold_chunks": _r(100, 80, 70, inter)}),
        "hi": LanguageResult(0.9, {"baseline": _r(300, 120, 100), "predicted_chunks": None,
                                   "gold_chunks": _r(300, 200)},
                             {"baseline": _r(150, 50, 40, inter), "gold_chunks": _r(150, 90, 60, inter)}),
    }}
    acc = {20: {"fr": 0.6, "hi": 0.7}, 500: {"fr": 0.9, "hi": 0.85}}
    uas = {"en": {20: {"fr": 0.7, "hi": 0.45}, 500: {"fr": 0.8, "hi": None}}}
    return results, acc, uas


def test_reports_match_golden_files(data_dir):
    doc = build_report_tables(*golden_grid())
    golden = data_dir / "golden"
    files = doc.tsv_files()
    assert sorted(files) == ["table2_size_sweep.tsv", "table3_head_accuracy.tsv",
                             "table4_full_tree_uas_en.tsv", "table5_inter_chunk_en.tsv"]
    for name, text in files.items():
        assert text == (golden / name).read_text(encoding="utf-8"), name
    assert doc.to_text() == (golden / "report.txt").read_text(encoding="utf-8")


def test_report_rows_and_averages():
    doc = build_report_tables(*golden_grid())
    full = next(t for t in doc.tables if t.name.startswith("table4"))
    assert [r[0] for r in full.rows] == ["fr", "hi", "Avg"]
    assert full.columns == ["Lang", "UAS with full tree transfer", "UAS with predicted chunks",
                            "UAS with gold chunks"]
    # average of 75.0 and 40.0; missing cell propagates to the average
    assert full.rows[2] == ["Avg", "57.5", NA, "75.8"]
    inter = next(t for t in doc.tables if t.name.startswith("table5"))
    assert len(inter.columns) == 7 and inter.rows[1][3:5] == [NA, NA]


def test_report_multiple_sources():
    results, acc, uas = golden_grid()
    results["hi"] = results["en"]
    uas["hi"] = uas["en"]
    doc = build_report_tables(results, acc, uas)
    names = [t.name for t in doc.tables]
    assert names == ["table2_size_sweep", "table3_head_accuracy", "table4_full_tree_uas_en",
                     "table5_inter_chunk_en", "table6_full_tree_uas_hi", "table7_inter_chunk_hi"]
    assert doc.tables[0].columns[-1] == "Avg. UAS (hi as src.)"


def test_report_without_sweep():
    results, _, _ = golden_grid()
    names = [t.name for t in build_report_tables(results).tables]
    assert names[0] == "table3_head_accuracy"


def test_empty_grid_rejected():
    with pytest.raises(EvaluationError):
        build_report_tables({})
    with pytest.raises(EvaluationError):
        build_report_tables({"en": {}})
