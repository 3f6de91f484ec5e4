"""Command-line entry point: ``chunktransfer <subcommand> ...``."""
from __future__ import annotations

import argparse
import logging
import random
import sys
from collections import Counter
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .chunker import ChunkerModel, train_chunker
from .chunks import annotate_sentence, derive_chunks
from .conllu import ConlluError, Sentence, read_treebank, write_conllu, write_treebank
from .evaluation import corpus_attachment_scores, inter_chunk_mask
from .experiment import ConfigError, load_config, run_experiment, sub_seed
from .head_rules import RuleConfigError, load_language_rules, load_rules
from .parser import ParserModel, train_parser
from .perceptron import ModelFormatError
from .pipeline import ModelMismatchError, baseline_sentence, parser_fn, predict_chunks, transfer_sentence
from .synthetic import generate_treebank
from .tree_transform import collapse_tree, ctree_to_sentence

logger = logging.getLogger("chunktransfer")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for data errors here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _need_file(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"input file {p} does not exist")
    return p


def _kv(**items) -> str:
    return " ".join(f"{k}={v}" for k, v in items.items())


def _write_log(path: Path, kind: str, errors: Sequence[int], seed: int) -> None:
    lines = [_kv(kind=kind, seed=seed, epochs=len(errors))]
    lines += [_kv(epoch=k, errors=e) for k, e in enumerate(errors, start=1)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _sized_path(path: Path, size: int) -> Path:
    return path.with_name(f"{path.stem}.n{size}{path.suffix}")


# -- subcommands ----------------------------------------------------------

def cmd_derive(args) -> int:
    treebank = read_treebank(_need_file(args.input), strict=args.strict)
    for w in treebank.warnings:
        logger.warning("event=input_warning %s", w)
    if not treebank:
        raise ValueError(f"{args.input}: no sentences")
    annotated, collapsed = [], []
    types: Counter = Counter()
    promoted = tokens = 0
    for sentence in treebank:
        chunks, _ = derive_chunks(sentence)
        annotated.append(annotate_sentence(sentence, chunks))
        collapsed.append(ctree_to_sentence(collapse_tree(sentence, chunks), sentence.sent_id,
                                           sentence.comments))
        types.update(c.chunk_type for c in chunks)
        promoted += sum(c.promoted for c in chunks)
        tokens += len(sentence)
    out = Path(args.output)
    chunk_out = Path(args.chunk_level) if args.chunk_level else out.with_name(f"{out.stem}.chunklevel{out.suffix}")
    write_treebank(out, annotated)
    write_treebank(chunk_out, collapsed)
    n_chunks = sum(types.values())
    print(_kv(sentences=len(treebank), tokens=tokens, chunks=n_chunks,
              tokens_per_chunk=f"{tokens / n_chunks:.2f}", promoted=promoted))
    for t in sorted(types):
        print(_kv(chunk_type=t, count=types[t]))
    logger.info("event=derive_done output=%s chunk_level=%s", out, chunk_out)
    return EXIT_OK


def _epochs_warning(epochs: int) -> None:
    if epochs == 0:
        logger.warning("event=zero_epochs message=%s", "model will have empty weights")


def cmd_train_chunker(args) -> int:
    treebank = read_treebank(_need_file(args.input), strict=args.strict)
    if not treebank:
        raise ValueError(f"{args.input}: no sentences")
    data = [(s.upos, derive_chunks(s)[1]) for s in treebank]
    _epochs_warning(args.epochs)
    out = Path(args.output)
    jobs = [(None, data, out)]
    if args.sizes:
        jobs = []
        for n in args.sizes:
            sample = random.Random(sub_seed(args.seed, f"size:{n}")).sample(data, min(n, len(data)))
            if len(sample) < n:
                logger.warning("event=short_training_set requested=%d available=%d", n, len(sample))
            jobs.append((n, sample, _sized_path(out, n)))
    for size, sample, path in jobs:
        model = train_chunker(sample, args.epochs, args.seed)
        model.save(path)
        _write_log(path.with_name(path.name + ".log"), "chunker", model.training_errors, args.seed)
        logger.info("event=model_written kind=chunker path=%s sentences=%d", path, len(sample))
    return EXIT_OK


def cmd_train_parser(args) -> int:
    treebank = read_treebank(_need_file(args.input), strict=args.strict)
    if not treebank:
        raise ValueError(f"{args.input}: no sentences")
    level = "word" if args.baseline else args.level
    trees = list(treebank) if level == "word" else [collapse_tree(s, derive_chunks(s)[0]) for s in treebank]
    _epochs_warning(args.epochs)
    model = train_parser(trees, args.epochs, args.seed, level=level)
    out = Path(args.output)
    model.save(out)
    _write_log(out.with_name(out.name + ".log"), "parser", model.training_errors, args.seed)
    logger.info("event=model_written kind=parser level=%s path=%s trees=%d", level, out, len(trees))
    return EXIT_OK


def cmd_transfer(args) -> int:
    modes = sum(bool(x) for x in (args.chunker, args.gold_chunks, args.baseline))
    if modes != 1:
        raise UsageError("choose exactly one of --chunker, --gold-chunks, --baseline")
    model = ParserModel.load(_need_file(args.parser))
    parse = parser_fn(model, "word" if args.baseline else "chunk", args.beam)
    chunker = rules = None
    if args.chunker:
        chunker = ChunkerModel.load(_need_file(args.chunker))
        if args.rules:
            rules = load_rules(_need_file(args.rules).read_text(encoding="utf-8"), name=Path(args.rules).stem)
        else:
            rules = load_language_rules(args.lang)
    target = read_treebank(_need_file(args.target), strict=args.strict)
    out: list[Sentence] = []
    for sentence in target:
        if args.baseline:
            out.append(baseline_sentence(sentence, parse))
            continue
        chunks = predict_chunks(sentence, chunker, rules)[0] if chunker else derive_chunks(sentence)[0]
        out.append(transfer_sentence(sentence, chunks, parse))
    Path(args.output).write_text(write_conllu(out), encoding="utf-8")
    logger.info("event=transfer_done sentences=%d output=%s", len(out), args.output)
    return EXIT_OK


def cmd_eval(args) -> int:
    gold = read_treebank(_need_file(args.gold), strict=args.strict)
    pred = read_treebank(_need_file(args.predicted), strict=args.strict)
    masks = [inter_chunk_mask(derive_chunks(s)[0]) for s in gold]
    for name, m in (("all", None), ("inter_chunk", masks)):
        rep = corpus_attachment_scores(gold, pred, m, mask_name=name, exclude_punct=args.exclude_punct)
        las = "n/a" if rep.las is None else f"{100 * rep.las:.2f}"
        print(_kv(scope=name, tokens=rep.token_count, uas=f"{100 * rep.uas:.2f}", las=las))
    return EXIT_OK


def cmd_experiment(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config.seed = args.seed
    run_experiment(config)
    report = config.output_dir / "reports" / "report.txt"
    print(report.read_text(encoding="utf-8"), end="")
    return EXIT_OK


def cmd_generate(args) -> int:
    sentences = generate_treebank(args.size, args.seed, head_final=args.head_final, prefix=args.prefix)
    write_treebank(args.output, sentences)
    return EXIT_OK


# -- wiring ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _ArgumentParser(prog="chunktransfer", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    def common(sp, seed=False, epochs=False):
        sp.add_argument("--strict", action="store_true", help="fail on the first invalid sentence")
        if seed:
            sp.add_argument("--seed", type=int, default=1)
        if epochs:
            sp.add_argument("--epochs", type=int, default=10)

    d = sub.add_parser("derive", help="annotate chunks and write chunk-level trees")
    d.add_argument("input")
    d.add_argument("-o", "--output", required=True)
    d.add_argument("--chunk-level", help="chunk-level output (default: <output>.chunklevel.conllu)")
    common(d)
    d.set_defaults(func=cmd_derive)

    c = sub.add_parser("train-chunker", help="train a BI chunker on UPOS sequences")
    c.add_argument("input")
    c.add_argument("-o", "--output", required=True)
    c.add_argument("--sizes", type=_int_list, help="comma-separated training sizes; one model per size")
    common(c, seed=True, epochs=True)
    c.set_defaults(func=cmd_train_chunker)

    t = sub.add_parser("train-parser", help="train a transition parser")
    t.add_argument("input")
    t.add_argument("-o", "--output", required=True)
    t.add_argument("--level", choices=["chunk", "word"], default="chunk")
    t.add_argument("--baseline", action="store_true", help="same as --level word")
    common(t, seed=True, epochs=True)
    t.set_defaults(func=cmd_train_parser)

    x = sub.add_parser("transfer", help="parse a target treebank")
    x.add_argument("target")
    x.add_argument("--parser", required=True)
    x.add_argument("-o", "--output", required=True)
    x.add_argument("--chunker", help="predict chunks with this model")
    x.add_argument("--gold-chunks", action="store_true", help="derive chunks from the target's gold trees")
    x.add_argument("--baseline", action="store_true", help="parse words with a word-level model")
    x.add_argument("--rules", help="head rule file for predicted chunks")
    x.add_argument("--lang", default="default", help="shipped head rules to use when --rules is absent")
    x.add_argument("--beam", type=int, default=1)
    common(x)
    x.set_defaults(func=cmd_transfer)

    e = sub.add_parser("eval", help="attachment scores over all and inter-chunk tokens")
    e.add_argument("gold")
    e.add_argument("predicted")
    e.add_argument("--exclude-punct", action="store_true")
    common(e)
    e.set_defaults(func=cmd_eval)

    r = sub.add_parser("experiment", help="run a configured experiment grid")
    r.add_argument("config")
    r.add_argument("--seed", type=int, help="override the config seed")
    r.set_defaults(func=cmd_experiment)

    g = sub.add_parser("generate", help="write a synthetic treebank")
    g.add_argument("-o", "--output", required=True)
    g.add_argument("--size", type=int, default=200)
    g.add_argument("--seed", type=int, default=1)
    g.add_argument("--head-final", action="store_true")
    g.add_argument("--prefix", default="s")
    g.set_defaults(func=cmd_generate)
    return p


def _int_list(text: str) -> list[int]:
    try:
        values = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of integers: {text!r}")
    if not values or any(v <= 0 for v in values):
        raise argparse.ArgumentTypeError("sizes must be positive")
    return values


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level, stream=sys.stderr,
                        format="level=%(levelname)s logger=%(name)s %(message)s")
    try:
        return args.func(args)
    except UsageError as err:
        parser.print_usage(sys.stderr)
        print(f"chunktransfer: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (ConlluError, ConfigError, RuleConfigError, ModelFormatError, ModelMismatchError,
            OSError, ValueError) as err:
        logger.error("event=failed command=%s error=%r", args.command, str(err))
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
