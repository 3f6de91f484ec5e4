import json

import pytest

from chunktransfer.conllu import write_treebank
from chunktransfer.evaluation import NA
from chunktransfer.experiment import DEFAULT_SIZES, ConfigError, load_config, run_experiment, sub_seed
from chunktransfer.synthetic import generate_treebank


@pytest.fixture(scope="module")
def corpora(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpora")
    write_treebank(root / "en.conllu", generate_treebank(150, seed=1, prefix="en"))
    write_treebank(root / "fr.conllu", generate_treebank(120, seed=2, prefix="fr"))
    write_treebank(root / "ja.conllu", generate_treebank(120, seed=3, head_final=True, prefix="ja"))
    return root


def write_config(path, corpora, out="out", extra="", targets=("fr", "ja"), sizes="20, 500"):
    options = {"source_treebank": str(corpora / "en.conllu"), "source_name": "en", "seed": "5",
               "parser_epochs": "3", "chunker_epochs": "3", "chunker_train_sizes": sizes, "output_dir": out}
    for line in filter(None, extra.splitlines()):
        key, _, value = line.partition("=")
        if value.strip():
            options[key.strip()] = value.strip()
        else:
            options.pop(key.strip(), None)
    lines = ["[experiment]"] + [f"{k} = {v}" for k, v in options.items()] + ["", "[targets]"]
    lines += [f"{t} = {corpora / (t + '.conllu')}" for t in targets]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def test_sub_seeds_are_stable_and_distinct():
    assert sub_seed(1, "a") == sub_seed(1, "a")
    assert len({sub_seed(1, "a"), sub_seed(1, "b"), sub_seed(2, "a")}) == 3


def test_load_config_defaults(tmp_path, corpora):
    cfg = load_config(write_config(tmp_path / "c.ini", corpora, sizes="20"))
    assert cfg.chunker_train_sizes == (20,)
    assert cfg.report_size == 20
    assert cfg.output_dir == tmp_path / "out"
    assert list(cfg.sources) == ["en"] and list(cfg.targets) == ["fr", "ja"]
    cfg = load_config(write_config(tmp_path / "d.ini", corpora, extra="chunker_train_sizes ="))
    assert cfg.chunker_train_sizes == DEFAULT_SIZES == (20, 50, 100, 200, 300, 500, 1000, 1500)
    assert cfg.report_size == 500
    cfg = load_config(write_config(tmp_path / "e.ini", corpora, sizes="100, 20, 100"))
    assert cfg.chunker_train_sizes == (20, 100) and cfg.report_size == 100


@pytest.mark.parametrize("extra,match", [
    ("conditions = baseline, magic", "unknown conditions"),
    ("report_size = 77", "report_size"),
    ("parser_epochs = -1", "non-negative"),
    ("seed = many", "seed"),
    ("chunker_pool_fraction = 1.5", "chunker_pool_fraction"),
])
def test_config_errors(tmp_path, corpora, extra, match):
    with pytest.raises(ConfigError, match=match):
        load_config(write_config(tmp_path / "c.ini", corpora, extra=extra))


def test_config_missing_target_path(tmp_path, corpora):
    path = write_config(tmp_path / "c.ini", corpora)
    path.write_text(path.read_text() + "de = nowhere/de.conllu\n")
    with pytest.raises(ConfigError, match="does not exist"):
        load_config(path)


def test_config_bad_sizes(tmp_path, corpora):
    with pytest.raises(ConfigError, match="positive"):
        load_config(write_config(tmp_path / "c.ini", corpora, sizes="20, 0"))
    with pytest.raises(ConfigError):
        load_config(write_config(tmp_path / "c.ini", corpora, sizes="20, x"))


def test_config_missing_sections(tmp_path):
    (tmp_path / "c.ini").write_text("[experiment]\noutput_dir = o\n")
    with pytest.raises(ConfigError, match="source"):
        load_config(tmp_path / "c.ini")
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "missing.ini")


@pytest.fixture(scope="module")
def finished(tmp_path_factory, corpora):
    root = tmp_path_factory.mktemp("run")
    cfg = load_config(write_config(root / "exp.ini", corpora))
    runner = run_experiment(cfg)
    return cfg, runner


def _tsv(path):
    return [line.split("\t") for line in path.read_text(encoding="utf-8").splitlines()]


def test_report_structure(finished):
    cfg, runner = finished
    reports = cfg.output_dir / "reports"
    assert sorted(p.name for p in reports.iterdir()) == [
        "report.txt", "table2_size_sweep.tsv", "table3_head_accuracy.tsv",
        "table4_full_tree_uas_en.tsv", "table5_inter_chunk_en.tsv"]
    sweep = _tsv(reports / "table2_size_sweep.tsv")
    assert [r[0] for r in sweep[1:]] == ["20", "500", "Gold chunk", "Full tree"]
    for name in ("table4_full_tree_uas_en.tsv", "table5_inter_chunk_en.tsv"):
        rows = _tsv(reports / name)
        assert [r[0] for r in rows[1:]] == ["fr", "ja", "Avg"]
        assert all(cell != NA for row in rows[1:] for cell in row)
    assert runner.failures == []


def test_artifacts_and_manifest(finished):
    cfg, runner = finished
    out = cfg.output_dir
    assert (out / "models" / "en" / "parser.chunk.model").is_file()
    assert (out / "models" / "en" / "parser.word.model").is_file()
    assert (out / "models" / "chunkers" / "fr" / "chunker.n500.model").is_file()
    preds = sorted(p.name for p in (out / "predictions" / "en" / "ja").iterdir())
    assert preds == ["baseline.conllu", "gold_chunks.conllu", "predicted_chunks.n20.conllu",
                     "predicted_chunks.n500.conllu"]
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 5 and manifest["config_sha256"] == cfg.config_sha256
    assert manifest["versions"]["parser_model"] == 1
    assert manifest["sub_seeds"]["chunker:fr:20"] == sub_seed(5, "chunker:fr:20")
    # the pool holds half of the 120 target sentences, so the 500 request is capped
    assert manifest["targets"]["fr"]["chunker_sizes"] == {"20": 20, "500": 60}
    assert "time" not in json.dumps(manifest)
    assert "seed: 5" in (out / "reports" / "report.txt").read_text()


def test_rerun_is_byte_identical(finished):
    cfg, _ = finished
    out = cfg.output_dir
    before = {p.relative_to(out): p.read_bytes() for p in out.rglob("*") if p.is_file()}
    run_experiment(cfg)
    after = {p.relative_to(out): p.read_bytes() for p in out.rglob("*") if p.is_file()}
    assert before == after


def test_partial_failure_marks_cells(tmp_path, corpora):
    (tmp_path / "empty.conllu").write_text("", encoding="utf-8")
    path = write_config(tmp_path / "c.ini", corpora, targets=("fr",), sizes="20")
    path.write_text(path.read_text() + f"\n[chunker_train]\nfr = {tmp_path / 'empty.conllu'}\n")
    cfg = load_config(path)
    runner = run_experiment(cfg)
    assert [f["cell"] for f in runner.failures] == ["chunker:fr:20"]
    full = _tsv(cfg.output_dir / "reports" / "table4_full_tree_uas_en.tsv")
    assert full[1][2] == NA and full[1][1] != NA and full[1][3] != NA
    report = (cfg.output_dir / "reports" / "report.txt").read_text()
    assert "Failed cells: 1" in report and "chunker:fr:20" in report


def test_condition_subset(tmp_path, corpora):
    cfg = load_config(write_config(tmp_path / "c.ini", corpora, targets=("fr",), sizes="20",
                                   extra="conditions = gold_chunks"))
    runner = run_experiment(cfg)
    assert runner.failures == []
    full = _tsv(cfg.output_dir / "reports" / "table4_full_tree_uas_en.tsv")
    assert full[1][1] == NA and full[1][2] == NA and full[1][3] != NA
    assert not (cfg.output_dir / "reports" / "table2_size_sweep.tsv").exists()


def test_config_inline_comments(tmp_path, corpora):
    (tmp_path / "c.ini").write_text(
        "[experiment]\nseed = 3          ; comment\noutput_dir = o  # comment\n"
        "chunker_train_sizes = 20\n\n"
        f"[sources]   ; one source\nen = {corpora / 'en.conllu'}\n\n[targets]\nfr = {corpora / 'fr.conllu'}\n")
    cfg = load_config(tmp_path / "c.ini")
    assert cfg.seed == 3 and cfg.output_dir == tmp_path / "o" and list(cfg.sources) == ["en"]
