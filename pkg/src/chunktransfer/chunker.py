"""Delexicalized BI chunker: averaged structured perceptron with Viterbi decoding.

Inputs are UPOS sequences only; word forms never reach the features.
"""
from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .chunks import ChunkSpan, label_runs, split_label
from .head_rules import HeadRuleSet, identify_head
from .perceptron import AveragedWeights, dump_model, load_model, score

logger = logging.getLogger(__name__)

FEATURE_TEMPLATE_VERSION = 1
MODEL_VERSION = 1
BOS, EOS = "<BOS>", "<EOS>"
_TRANS = "T:"


def extract_features(upos: Sequence[str], position: int) -> list[str]:
    """PoS window features around ``position`` (template version 1)."""
    if not 0 <= position < len(upos):
        raise IndexError(f"position {position} outside sequence of length {len(upos)}")
    padded = [BOS, BOS, *upos, EOS, EOS]
    i = position + 2
    w = {k: padded[i + k] for k in (-2, -1, 0, 1, 2)}
    return [
        "bias",
        f"u-2={w[-2]}", f"u-1={w[-1]}", f"u0={w[0]}", f"u+1={w[1]}", f"u+2={w[2]}",
        f"b-2,-1={w[-2]},{w[-1]}", f"b-1,0={w[-1]},{w[0]}",
        f"b0,+1={w[0]},{w[1]}", f"b+1,+2={w[1]},{w[2]}",
        f"t-2,-1,0={w[-2]},{w[-1]},{w[0]}",
        f"t-1,0,+1={w[-1]},{w[0]},{w[1]}",
        f"t0,+1,+2={w[0]},{w[1]},{w[2]}",
    ]


@dataclass
class ChunkerModel:
    label_set: tuple[str, ...]
    feature_weights: dict[str, dict[str, float]] = field(default_factory=dict)
    transition_weights: dict[str, dict[str, float]] = field(default_factory=dict)
    version: int = MODEL_VERSION
    meta: dict[str, str] = field(default_factory=dict)

    def to_text(self) -> str:
        weights = dict(self.feature_weights)
        for prev, row in self.transition_weights.items():
            weights[_TRANS + prev] = row
        meta = dict(self.meta)
        meta["labels"] = ",".join(self.label_set)
        meta["template"] = str(FEATURE_TEMPLATE_VERSION)
        return dump_model("chunker", self.version, meta, weights)

    @classmethod
    def from_text(cls, text: str) -> "ChunkerModel":
        meta, weights = load_model(text, "chunker", MODEL_VERSION)
        if meta.get("template") != str(FEATURE_TEMPLATE_VERSION):
            raise ValueError(f"chunker feature template {meta.get('template')!r} is not supported")
        labels = tuple(meta.pop("labels").split(","))
        for key in ("kind", "version", "template"):
            meta.pop(key, None)
        feats, trans = _split_weights(weights)
        return cls(labels, feats, trans, MODEL_VERSION, meta)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "ChunkerModel":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))

    @property
    def training_errors(self) -> list[int]:
        raw = self.meta.get("epoch_errors", "")
        return [int(x) for x in raw.split(",") if x]


def _viterbi(labels: Sequence[str], emissions: list[dict[str, float]],
             transitions: dict[str, dict[str, float]]) -> list[str]:
    # ties go to the earlier label in ``labels``
    n = len(emissions)
    start = transitions.get(BOS, {})
    best = [start.get(y, 0.0) + emissions[0].get(y, 0.0) for y in labels]
    back: list[list[int]] = []
    for i in range(1, n):
        cur, ptr = [], []
        for y in labels:
            arg, top = 0, None
            for k, prev in enumerate(labels):
                s = best[k] + transitions.get(prev, {}).get(y, 0.0)
                if top is None or s > top:
                    arg, top = k, s
            cur.append(top + emissions[i].get(y, 0.0))
            ptr.append(arg)
        best = cur
        back.append(ptr)
    k = max(range(len(labels)), key=lambda j: (best[j], -j))
    path = [k]
    for ptr in reversed(back):
        k = ptr[k]
        path.append(k)
    return [labels[k] for k in reversed(path)]


def _split_weights(weights: dict[str, dict[str, float]]):
    feats = {f: r for f, r in weights.items() if not f.startswith(_TRANS)}
    trans = {f[len(_TRANS):]: r for f, r in weights.items() if f.startswith(_TRANS)}
    return feats, trans


def _check_labels(labels: Sequence[str]) -> None:
    for label in labels:
        split_label(label)


def train_chunker(training: Sequence[tuple[Sequence[str], Sequence[str]]],
                  epochs: int, seed: int = 0) -> ChunkerModel:
    """Train on ``(upos_sequence, bi_labels)`` pairs.

    Example order is reshuffled each epoch from ``seed``; nothing else is
    random.  The returned model holds the averaged weights.
    """
    if not training:
        raise ValueError("empty training set")
    if epochs < 0:
        raise ValueError("epochs must be non-negative")
    data = []
    seen = set()
    for k, (upos, labels) in enumerate(training):
        if not upos:
            raise ValueError(f"training sequence {k} is empty")
        if len(upos) != len(labels):
            raise ValueError(f"training sequence {k}: {len(upos)} tags but {len(labels)} labels")
        _check_labels(labels)
        seen.update(labels)
        feats = [extract_features(upos, i) for i in range(len(upos))]
        data.append((feats, list(labels)))
    label_set = tuple(sorted(seen))

    model = AveragedWeights()
    rng = random.Random(seed)
    order = list(range(len(data)))
    epoch_errors = []
    for epoch in range(epochs):
        rng.shuffle(order)
        errors = 0
        for idx in order:
            feats, gold = data[idx]
            trans_w = {prev: model.weights.get(_TRANS + prev, {}) for prev in (BOS, *label_set)}
            pred = _viterbi(label_set, [score(model.weights, f) for f in feats], trans_w)
            if pred != gold:
                for i, (g, p) in enumerate(zip(gold, pred)):
                    if g != p:
                        errors += 1
                        for f in feats[i]:
                            model.update(f, g, 1.0)
                            model.update(f, p, -1.0)
                    gprev = gold[i - 1] if i else BOS
                    pprev = pred[i - 1] if i else BOS
                    if (gprev, g) != (pprev, p):
                        model.update(_TRANS + gprev, g, 1.0)
                        model.update(_TRANS + pprev, p, -1.0)
            model.tick()
        epoch_errors.append(errors)
        logger.debug("event=chunker_epoch epoch=%d token_errors=%d", epoch + 1, errors)

    feat_w, trans_w = _split_weights(model.averaged())
    meta = {
        "seed": str(seed),
        "epochs": str(epochs),
        "sentences": str(len(data)),
        "epoch_errors": ",".join(map(str, epoch_errors)),
    }
    return ChunkerModel(label_set, feat_w, trans_w, MODEL_VERSION, meta)


def repair_bi(labels: Sequence[str]) -> list[str]:
    """Rewrite every I-X that does not continue an X chunk as B-X."""
    out = []
    prev_type = None
    for label in labels:
        boundary, ctype = split_label(label)
        if boundary == "I" and prev_type != ctype:
            label = f"B-{ctype}"
        out.append(label)
        prev_type = ctype
    return out


def predict_labels(model: ChunkerModel, upos: Sequence[str]) -> list[str]:
    if not upos:
        raise ValueError("cannot chunk an empty sequence")
    emissions = [score(model.feature_weights, extract_features(upos, i)) for i in range(len(upos))]
    return repair_bi(_viterbi(model.label_set, emissions, model.transition_weights))


def decode_spans(labels: Sequence[str], upos: Sequence[str], head_rules: HeadRuleSet) -> list[ChunkSpan]:
    """Turn repaired BI labels into spans whose heads come from ``head_rules``."""
    if len(labels) != len(upos):
        raise ValueError(f"{len(labels)} labels for {len(upos)} tags")
    spans = []
    for ordinal, (start, end, ctype) in enumerate(label_runs(labels), start=1):
        members = [(t, upos[t - 1]) for t in range(start, end + 1)]
        head = identify_head(members, ctype, head_rules)
        spans.append(ChunkSpan(start, end, ctype, head, ordinal))
    return spans
