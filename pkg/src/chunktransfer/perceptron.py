"""Sparse averaged-perceptron weights and the shared model file format.

Model files are plain text::

    #chunktransfer-model
    #kind=chunker
    #version=1
    #<key>=<value>            (free metadata, sorted)
    feature<TAB>label<TAB>weight
    ...

Weight lines are sorted by (feature, label) and written with ``repr`` so a
file round-trips exactly and identical training runs give identical bytes.
"""
from __future__ import annotations

from collections import defaultdict
from pathlib import Path
from typing import Iterable, Mapping

MAGIC = "#chunktransfer-model"


class ModelFormatError(ValueError):
    pass


class AveragedWeights:
    """Weights indexed by ``feature -> label -> value`` with lazy averaging.

    ``tick()`` advances the instance counter; ``update`` adds to one weight
    and keeps the running sum needed for the averaged vector.
    """

    def __init__(self):
        self.weights: dict[str, dict[str, float]] = defaultdict(dict)
        self._totals: dict[tuple[str, str], float] = defaultdict(float)
        self._stamps: dict[tuple[str, str], int] = defaultdict(int)
        self.instances = 0

    def tick(self) -> None:
        self.instances += 1

    def update(self, feature: str, label: str, delta: float) -> None:
        key = (feature, label)
        row = self.weights[feature]
        current = row.get(label, 0.0)
        self._totals[key] += (self.instances - self._stamps[key]) * current
        self._stamps[key] = self.instances
        row[label] = current + delta

    def averaged(self) -> dict[str, dict[str, float]]:
        out: dict[str, dict[str, float]] = {}
        if self.instances == 0:
            return out
        for feature, row in self.weights.items():
            for label, value in row.items():
                key = (feature, label)
                total = self._totals[key] + (self.instances - self._stamps[key]) * value
                avg = total / self.instances
                if avg:
                    out.setdefault(feature, {})[label] = avg
        return out


def score(weights: Mapping[str, Mapping[str, float]], features: Iterable[str]) -> dict[str, float]:
    scores: dict[str, float] = defaultdict(float)
    for f in features:
        row = weights.get(f)
        if row:
            for label, w in row.items():
                scores[label] += w
    return scores


def dump_model(kind: str, version: int, meta: Mapping[str, str],
               weights: Mapping[str, Mapping[str, float]]) -> str:
    lines = [MAGIC, f"#kind={kind}", f"#version={version}"]
    for key in sorted(meta):
        value = str(meta[key])
        if "\n" in value:
            raise ModelFormatError(f"metadata {key!r} contains a newline")
        lines.append(f"#{key}={value}")
    for feature in sorted(weights):
        row = weights[feature]
        for label in sorted(row):
            if "\t" in feature or "\t" in label:
                raise ModelFormatError(f"tab inside feature {feature!r} or label {label!r}")
            lines.append(f"{feature}\t{label}\t{row[label]!r}")
    return "\n".join(lines) + "\n"


def load_model(text: str, kind: str, version: int) -> tuple[dict[str, str], dict[str, dict[str, float]]]:
    lines = text.splitlines()
    if not lines or lines[0] != MAGIC:
        raise ModelFormatError("not a chunktransfer model file")
    meta: dict[str, str] = {}
    weights: dict[str, dict[str, float]] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line[1:].partition("=")
            meta[key] = value
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ModelFormatError(f"line {lineno}: expected feature, label, weight")
        try:
            weights.setdefault(parts[0], {})[parts[1]] = float(parts[2])
        except ValueError:
            raise ModelFormatError(f"line {lineno}: bad weight {parts[2]!r}") from None
    if meta.get("kind") != kind:
        raise ModelFormatError(f"expected a {kind} model, found {meta.get('kind')!r}")
    if meta.get("version") != str(version):
        raise ModelFormatError(
            f"{kind} model version {meta.get('version')!r} does not match supported version {version}")
    return meta, weights


def write_text(path: str | Path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")
