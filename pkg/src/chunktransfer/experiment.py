"""Config-driven experiment grid: sources x targets x conditions x chunker sizes."""
from __future__ import annotations

import configparser
import hashlib
import json
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from . import __version__
from .chunker import FEATURE_TEMPLATE_VERSION as CHUNKER_TEMPLATE
from .chunker import MODEL_VERSION as CHUNKER_VERSION
from .chunker import ChunkerModel, train_chunker
from .chunks import derive_chunks
from .conllu import Sentence, read_treebank, write_treebank
from .evaluation import (CONDITIONS, LanguageResult, ReportDocument, build_report_tables,
                         chunk_label_accuracy, corpus_attachment_scores, head_identification_accuracy,
                         inter_chunk_mask)
from .head_rules import RULES_VERSION, HeadRuleSet, load_language_rules
from .parser import FEATURE_TEMPLATE_VERSION as PARSER_TEMPLATE
from .parser import MODEL_VERSION as PARSER_VERSION
from .parser import ParserModel, train_parser
from .pipeline import (ParseFn, baseline_sentence, heads_on_spans, parser_fn, predict_chunks,
                       transfer_sentence)
from .tree_transform import collapse_tree

logger = logging.getLogger(__name__)

DEFAULT_SIZES = (20, 50, 100, 200, 300, 500, 1000, 1500)
DEFAULT_REPORT_SIZE = 500


class ConfigError(ValueError):
    pass


def sub_seed(seed: int, name: str) -> int:
    """Derive an independent, stable seed for one named random stream."""
    digest = hashlib.sha256(f"{seed}:{name}".encode("utf-8")).hexdigest()
    return int(digest[:8], 16)


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


@dataclass
class ExperimentConfig:
    sources: dict[str, Path]
    targets: dict[str, Path]
    output_dir: Path
    chunker_train: dict[str, Path] = field(default_factory=dict)
    chunker_train_sizes: tuple[int, ...] = DEFAULT_SIZES
    parser_epochs: int = 10
    chunker_epochs: int = 10
    seed: int = 1
    head_rules_dir: Optional[Path] = None
    conditions: tuple[str, ...] = CONDITIONS
    report_size: int = DEFAULT_REPORT_SIZE
    # share of a target treebank reserved for chunker training when no
    # separate chunker training file is given
    chunker_pool_fraction: float = 0.5
    config_sha256: str = ""

    @property
    def seed_names(self) -> list[str]:
        names = [f"parser:{s}:{lvl}" for s in self.sources for lvl in ("chunk", "word")]
        names += [f"split:{t}" for t in self.targets]
        names += [f"chunker:{t}:{n}{suffix}" for t in self.targets for n in self.chunker_train_sizes
                  for suffix in ("", ":order")]
        return names


def _int(section, key: str, default: int) -> int:
    try:
        return section.getint(key, fallback=default)
    except ValueError as err:
        raise ConfigError(f"{key}: {err}") from err


def load_config(path: str | Path) -> ExperimentConfig:
    """Read an INI-style config.  Relative paths resolve against the
    directory holding the config file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} not found")
    text = path.read_text(encoding="utf-8")
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as err:
        raise ConfigError(str(err)) from err
    if not parser.has_section("experiment"):
        raise ConfigError("missing [experiment] section")
    exp = parser["experiment"]
    base = path.parent

    def resolve(value: str, what: str) -> Path:
        p = Path(value.strip())
        p = p if p.is_absolute() else base / p
        if not p.exists():
            raise ConfigError(f"{what}: path {p} does not exist")
        return p

    sources: dict[str, Path] = {}
    if parser.has_section("sources"):
        sources = {k: resolve(v, f"source {k}") for k, v in parser["sources"].items()}
    elif "source_treebank" in exp:
        sources = {exp.get("source_name", "src"): resolve(exp["source_treebank"], "source_treebank")}
    if not sources:
        raise ConfigError("no source treebank (set source_treebank or a [sources] section)")
    if not parser.has_section("targets") or not parser["targets"]:
        raise ConfigError("missing or empty [targets] section")
    targets = {k: resolve(v, f"target {k}") for k, v in parser["targets"].items()}
    chunker_train = {}
    if parser.has_section("chunker_train"):
        for k, v in parser["chunker_train"].items():
            if k not in targets:
                raise ConfigError(f"chunker_train entry {k!r} has no matching target")
            chunker_train[k] = resolve(v, f"chunker_train {k}")

    sizes = DEFAULT_SIZES
    if "chunker_train_sizes" in exp:
        try:
            sizes = tuple(int(x) for x in exp["chunker_train_sizes"].replace(",", " ").split())
        except ValueError as err:
            raise ConfigError(f"chunker_train_sizes: {err}") from err
    if not sizes or any(n <= 0 for n in sizes):
        raise ConfigError("chunker_train_sizes must be positive integers")
    sizes = tuple(sorted(set(sizes)))

    conditions = CONDITIONS
    if "conditions" in exp:
        conditions = tuple(c.strip() for c in exp["conditions"].replace(",", " ").split())
        unknown = [c for c in conditions if c not in CONDITIONS]
        if unknown or not conditions:
            raise ConfigError(f"unknown conditions {unknown}; choose from {', '.join(CONDITIONS)}")
        conditions = tuple(c for c in CONDITIONS if c in conditions)

    if "report_size" in exp:
        report_size = _int(exp, "report_size", DEFAULT_REPORT_SIZE)
        if report_size not in sizes:
            raise ConfigError(f"report_size {report_size} is not one of chunker_train_sizes")
    else:
        report_size = DEFAULT_REPORT_SIZE if DEFAULT_REPORT_SIZE in sizes else max(sizes)

    epochs = {k: _int(exp, k, 10) for k in ("parser_epochs", "chunker_epochs")}
    if any(v < 0 for v in epochs.values()):
        raise ConfigError("epoch counts must be non-negative")
    try:
        fraction = exp.getfloat("chunker_pool_fraction", fallback=0.5)
    except ValueError as err:
        raise ConfigError(f"chunker_pool_fraction: {err}") from err
    if not 0.0 < fraction < 1.0:
        raise ConfigError("chunker_pool_fraction must lie strictly between 0 and 1")

    if "output_dir" not in exp:
        raise ConfigError("output_dir is required")
    out = Path(exp["output_dir"].strip())
    rules_dir = resolve(exp["head_rules_dir"], "head_rules_dir") if exp.get("head_rules_dir") else None

    return ExperimentConfig(
        sources=sources, targets=targets, output_dir=out if out.is_absolute() else base / out,
        chunker_train=chunker_train, chunker_train_sizes=sizes,
        parser_epochs=epochs["parser_epochs"], chunker_epochs=epochs["chunker_epochs"],
        seed=_int(exp, "seed", 1), head_rules_dir=rules_dir, conditions=conditions,
        report_size=report_size, chunker_pool_fraction=fraction,
        config_sha256=hashlib.sha256(text.encode("utf-8")).hexdigest())


# -- the grid -----------------------------------------------------------------

@dataclass
class _Target:
    lang: str
    eval_set: list[Sentence]
    pool: list[Sentence]
    rules: HeadRuleSet
    gold_chunks: list = field(default_factory=list)
    gold_labels: list = field(default_factory=list)


class ExperimentRunner:
    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.out = config.output_dir
        self.failures: list[dict[str, str]] = []
        self.cells: dict[str, str] = {}
        self.notes: dict[str, dict] = {}

    def _cell(self, name: str, fn: Callable):
        """Run one grid cell; a failure is logged, recorded and yields None."""
        try:
            result = fn()
        except Exception as err:  # a broken cell must not stop the grid
            logger.warning("event=cell_failed cell=%s error=%r", name, str(err))
            self.failures.append({"cell": name, "error": f"{type(err).__name__}: {err}"})
            self.cells[name] = "failed"
            return None
        self.cells[name] = "ok"
        return result

    def _path(self, *parts: str) -> Path:
        p = self.out.joinpath(*parts)
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    # individual steps

    def _train_parsers(self, src: str, sentences: list[Sentence]) -> dict[str, ParserModel]:
        cfg = self.config
        models = {}
        if {"predicted_chunks", "gold_chunks"} & set(cfg.conditions):
            trees, skipped = [], 0
            for s in sentences:
                try:
                    trees.append(collapse_tree(s, derive_chunks(s)[0]))
                except ValueError:
                    skipped += 1
            if skipped:
                logger.warning("event=collapse_skipped source=%s sentences=%d", src, skipped)
            model = self._cell(f"parser:{src}:chunk", lambda: train_parser(
                trees, cfg.parser_epochs, sub_seed(cfg.seed, f"parser:{src}:chunk"), level="chunk"))
            if model:
                model.save(self._path("models", src, "parser.chunk.model"))
                models["chunk"] = model
        if "baseline" in cfg.conditions:
            model = self._cell(f"parser:{src}:word", lambda: train_parser(
                sentences, cfg.parser_epochs, sub_seed(cfg.seed, f"parser:{src}:word"), level="word"))
            if model:
                model.save(self._path("models", src, "parser.word.model"))
                models["word"] = model
        return models

    def _load_target(self, lang: str) -> _Target:
        cfg = self.config
        sentences = list(read_treebank(cfg.targets[lang]))
        if not sentences:
            raise ValueError(f"target treebank {cfg.targets[lang]} is empty")
        if lang in cfg.chunker_train:
            eval_set, pool = sentences, list(read_treebank(cfg.chunker_train[lang]))
        else:
            order = list(range(len(sentences)))
            random.Random(sub_seed(cfg.seed, f"split:{lang}")).shuffle(order)
            cut = int(round(len(order) * cfg.chunker_pool_fraction))
            pool_ids = set(order[:cut])
            pool = [s for k, s in enumerate(sentences) if k in pool_ids]
            eval_set = [s for k, s in enumerate(sentences) if k not in pool_ids]
        if not eval_set:
            raise ValueError(f"target {lang}: no sentences left for evaluation")
        target = _Target(lang, eval_set, pool, load_language_rules(lang, cfg.head_rules_dir))
        for s in eval_set:
            spans, labels = derive_chunks(s)
            target.gold_chunks.append(spans)
            target.gold_labels.append(labels)
        self.notes[lang] = {"eval_sentences": len(eval_set), "chunker_pool": len(pool),
                            "rules": target.rules.name}
        return target

    def _train_chunker(self, target: _Target, size: int) -> ChunkerModel:
        cfg = self.config
        if not target.pool:
            raise ValueError(f"target {target.lang}: no chunker training data")
        rng = random.Random(sub_seed(cfg.seed, f"chunker:{target.lang}:{size}"))
        sample = rng.sample(target.pool, min(size, len(target.pool)))
        if len(sample) < size:
            logger.warning("event=chunker_pool_short target=%s requested=%d available=%d",
                           target.lang, size, len(sample))
        self.notes[target.lang].setdefault("chunker_sizes", {})[str(size)] = len(sample)
        model = train_chunker([(s.upos, derive_chunks(s)[1]) for s in sample], cfg.chunker_epochs,
                              sub_seed(cfg.seed, f"chunker:{target.lang}:{size}:order"))
        model.save(self._path("models", "chunkers", target.lang, f"chunker.n{size}.model"))
        return model

    def _predict(self, target: _Target, chunker: ChunkerModel, size: int):
        chunks, labels = [], []
        for s in target.eval_set:
            c, l = predict_chunks(s, chunker, target.rules)
            chunks.append(c)
            labels.append(l)
        return chunks, chunk_label_accuracy(target.gold_labels, labels)

    def _score(self, src: str, target: _Target, name: str, preds: list[Sentence]):
        write_treebank(self._path("predictions", src, target.lang, f"{name}.conllu"), preds)
        masks = [inter_chunk_mask(c) for c in target.gold_chunks]
        full = corpus_attachment_scores(target.eval_set, preds, mask_name="all")
        inter = corpus_attachment_scores(target.eval_set, preds, masks, mask_name="inter_chunk")
        return full, inter

    def _transfer(self, src, target, name, chunks_per_sentence, parse: ParseFn):
        preds = [transfer_sentence(s, c, parse) for s, c in zip(target.eval_set, chunks_per_sentence)]
        return self._score(src, target, name, preds)

    def run(self) -> ReportDocument:
        cfg = self.config
        self.out.mkdir(parents=True, exist_ok=True)
        logger.info("event=experiment_start sources=%s targets=%s seed=%d",
                    ",".join(cfg.sources), ",".join(cfg.targets), cfg.seed)

        targets = {}
        for lang in cfg.targets:
            t = self._cell(f"target:{lang}", lambda: self._load_target(lang))
            if t:
                targets[lang] = t

        chunkers: dict[str, dict[int, tuple]] = {lang: {} for lang in cfg.targets}
        sweep_acc: dict[int, dict[str, Optional[float]]] = {}
        if "predicted_chunks" in cfg.conditions:
            for size in cfg.chunker_train_sizes:
                sweep_acc[size] = {}
                for lang, t in targets.items():
                    def cell(t=t, size=size):
                        return self._predict(t, self._train_chunker(t, size), size)
                    res = self._cell(f"chunker:{lang}:{size}", cell)
                    if res:
                        chunkers[lang][size] = res
                        sweep_acc[size][lang] = res[1]

        head_acc = {}
        for lang, t in targets.items():
            head_acc[lang] = self._cell(f"heads:{lang}", lambda: head_identification_accuracy(
                t.gold_chunks, [heads_on_spans(s, c, t.rules) for s, c in zip(t.eval_set, t.gold_chunks)]))

        results: dict[str, dict[str, LanguageResult]] = {}
        sweep_uas: dict[str, dict[int, dict[str, Optional[float]]]] = {}
        for src, path in cfg.sources.items():
            results[src] = {lang: LanguageResult() for lang in cfg.targets}
            sweep_uas[src] = {size: {} for size in sweep_acc}
            sentences = self._cell(f"source:{src}", lambda: list(read_treebank(path)))
            models = self._train_parsers(src, sentences) if sentences else {}
            for lang, t in targets.items():
                res = results[src][lang]
                res.head_accuracy = head_acc.get(lang)
                if "baseline" in cfg.conditions and "word" in models:
                    parse = parser_fn(models["word"], "word")
                    scores = self._cell(f"baseline:{src}:{lang}", lambda: self._score(
                        src, t, "baseline", [baseline_sentence(s, parse) for s in t.eval_set]))
                    if scores:
                        res.full["baseline"], res.inter["baseline"] = scores
                if "chunk" not in models:
                    continue
                parse = parser_fn(models["chunk"], "chunk")
                if "gold_chunks" in cfg.conditions:
                    scores = self._cell(f"gold_chunks:{src}:{lang}", lambda: self._transfer(
                        src, t, "gold_chunks", t.gold_chunks, parse))
                    if scores:
                        res.full["gold_chunks"], res.inter["gold_chunks"] = scores
                for size, (chunks, _) in chunkers[lang].items():
                    scores = self._cell(f"predicted_chunks:{src}:{lang}:{size}", lambda: self._transfer(
                        src, t, f"predicted_chunks.n{size}", chunks, parse))
                    if not scores:
                        continue
                    sweep_uas[src][size][lang] = scores[0].uas
                    if size == cfg.report_size:
                        res.full["predicted_chunks"], res.inter["predicted_chunks"] = scores

        document = build_report_tables(results, sweep_acc or None, sweep_uas if sweep_acc else None)
        self._write_reports(document)
        logger.info("event=experiment_done cells=%d failures=%d", len(self.cells), len(self.failures))
        return document

    def _write_reports(self, document: ReportDocument) -> None:
        cfg = self.config
        for name, text in document.tsv_files().items():
            self._path("reports", name).write_text(text, encoding="utf-8")
        summary = [f"seed: {cfg.seed}", f"config sha256: {cfg.config_sha256}", ""]
        summary.append(document.to_text())
        summary.append(f"Failed cells: {len(self.failures)}")
        summary += [f"  {f['cell']}: {f['error']}" for f in self.failures]
        self._path("reports", "report.txt").write_text("\n".join(summary) + "\n", encoding="utf-8")
        self._path("manifest.json").write_text(
            json.dumps(self.manifest(), indent=2, sort_keys=True) + "\n", encoding="utf-8")

    def manifest(self) -> dict:
        cfg = self.config
        return {
            "config_sha256": cfg.config_sha256,
            "seed": cfg.seed,
            "sub_seeds": {name: sub_seed(cfg.seed, name) for name in cfg.seed_names},
            "versions": {
                "package": __version__,
                "chunker_model": CHUNKER_VERSION,
                "chunker_template": CHUNKER_TEMPLATE,
                "parser_model": PARSER_VERSION,
                "parser_template": PARSER_TEMPLATE,
                "head_rules": RULES_VERSION,
            },
            "inputs": {str(p): _sha256_file(p) for p in
                       [*cfg.sources.values(), *cfg.targets.values(), *cfg.chunker_train.values()]},
            "conditions": list(cfg.conditions),
            "chunker_train_sizes": list(cfg.chunker_train_sizes),
            "report_size": cfg.report_size,
            "targets": self.notes,
            "cells": self.cells,
            "failures": self.failures,
        }


def run_experiment(config: ExperimentConfig) -> ExperimentRunner:
    runner = ExperimentRunner(config)
    runner.run()
    return runner
