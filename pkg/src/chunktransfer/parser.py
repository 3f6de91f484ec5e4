"""Delexicalized arc-standard dependency parser trained with an averaged perceptron.

The same parser handles chunk-level trees (nodes are chunk heads described
by head UPOS and chunk type) and word-level trees for the baseline (nodes
are words, chunk type ``_``).  Node indices are 1-based; 0 is the
artificial root that sits at the bottom of the stack.
"""
from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence, Union

from .conllu import Sentence, base_relation
from .perceptron import AveragedWeights, dump_model, load_model, score
from .tree_transform import ChunkLevelTree

logger = logging.getLogger(__name__)

MODEL_VERSION = 1
FEATURE_TEMPLATE_VERSION = 1
SHIFT = "SH"
ROOT_LABEL = "root"
FALLBACK_LABEL = "dep"
NO_CHUNK = "_"

Node = tuple[str, str]  # (upos, chunk type)
Tree = Union[ChunkLevelTree, Sentence]


class OracleError(ValueError):
    pass


@dataclass(frozen=True)
class ParseInstance:
    nodes: tuple[Node, ...]
    heads: tuple[int, ...]
    labels: tuple[str, ...]


def left_arc(label: str) -> str:
    return f"LA:{label}"


def right_arc(label: str) -> str:
    return f"RA:{label}"


def instance_from(tree: Tree) -> ParseInstance:
    if isinstance(tree, ChunkLevelTree):
        nodes = tuple((n.head_upos, n.chunk_type) for n in tree.nodes)
        heads, labels = tree.heads, tree.labels
    else:
        nodes = tuple((t.upos, NO_CHUNK) for t in tree.tokens)
        heads, labels = tree.heads, [t.deprel for t in tree.tokens]
    labels = [ROOT_LABEL if h == 0 else base_relation(l) for h, l in zip(heads, labels)]
    return ParseInstance(nodes, tuple(heads), tuple(labels))


# -- projectivity ---------------------------------------------------------

def _dominates(heads: Sequence[int], ancestor: int, node: int) -> bool:
    # heads[0] is the artificial root
    while node != 0:
        if node == ancestor:
            return True
        node = heads[node]
    return ancestor == 0


def _nonprojective(heads: Sequence[int], dep: int) -> bool:
    h = heads[dep]
    lo, hi = sorted((h, dep))
    return any(not _dominates(heads, h, k) for k in range(lo + 1, hi))


def is_projective(heads: Sequence[int]) -> bool:
    """``heads`` lists the parent of nodes 1..n (0 = root)."""
    full = [0, *heads]
    return not any(_nonprojective(full, d) for d in range(1, len(full)))


def projectivize_heads(heads: Sequence[int]) -> list[int]:
    """Lift non-projective arcs until the tree is projective.

    The shortest offending arc is lifted first; its dependent moves to its
    grandparent.  Arcs from the root token never cross, so the root stays
    unique.
    """
    full = [0, *heads]
    while True:
        bad = [d for d in range(1, len(full)) if _nonprojective(full, d)]
        if not bad:
            return full[1:]
        dep = min(bad, key=lambda d: (abs(full[d] - d), d))
        full[dep] = full[full[dep]]


def projectivize(tree: Tree) -> Tree:
    heads = tree.heads
    new = projectivize_heads(heads)
    if new == heads:
        return tree
    if isinstance(tree, ChunkLevelTree):
        return tree.with_arcs(new, tree.labels)
    return tree.with_tokens(replace(t, head=h) for t, h in zip(tree.tokens, new))


# -- transition system ----------------------------------------------------

class Configuration:
    __slots__ = ("n", "stack", "next", "heads", "labels", "left", "right")

    def __init__(self, n: int):
        self.n = n
        self.stack = [0]
        self.next = 1
        self.heads = [-1] * (n + 1)
        self.labels = [""] * (n + 1)
        self.left: list[list[int]] = [[] for _ in range(n + 1)]
        self.right: list[list[int]] = [[] for _ in range(n + 1)]

    def copy(self) -> "Configuration":
        other = Configuration.__new__(Configuration)
        other.n = self.n
        other.stack = list(self.stack)
        other.next = self.next
        other.heads = list(self.heads)
        other.labels = list(self.labels)
        other.left = [list(x) for x in self.left]
        other.right = [list(x) for x in self.right]
        return other

    @property
    def buffer_empty(self) -> bool:
        return self.next > self.n

    @property
    def terminal(self) -> bool:
        return self.buffer_empty and len(self.stack) == 1

    def _attach(self, head: int, dep: int, label: str) -> None:
        self.heads[dep] = head
        self.labels[dep] = label
        (self.left if dep < head else self.right)[head].append(dep)

    def apply(self, transition: str) -> None:
        if transition == SHIFT:
            self.stack.append(self.next)
            self.next += 1
            return
        kind, label = transition.split(":", 1)
        s0 = self.stack.pop()
        if kind == "LA":
            s1 = self.stack.pop()
            self._attach(s0, s1, label)
            self.stack.append(s0)
        else:
            self._attach(self.stack[-1], s0, label)

    def valid(self, labels: Sequence[str]) -> list[str]:
        out = []
        depth = len(self.stack)
        if depth >= 2:
            if self.stack[-2] == 0:
                if self.buffer_empty:
                    out.append(right_arc(ROOT_LABEL))
            else:
                out.extend(left_arc(l) for l in labels)
                out.extend(right_arc(l) for l in labels)
        if not self.buffer_empty:
            out.append(SHIFT)
        return out


def static_oracle(heads: Sequence[int], labels: Sequence[str]) -> list[str]:
    """Arc-standard transition sequence that rebuilds a projective tree."""
    n = len(heads)
    if sum(1 for h in heads if h == 0) != 1:
        raise OracleError("tree must have exactly one root attachment")
    full = [0, *heads]
    config = Configuration(n)
    pending = [0] * (n + 1)
    for d in range(1, n + 1):
        pending[full[d]] += 1
    out = []
    while not config.terminal:
        t = _oracle_step(config, full, labels, pending)
        if t is None:
            raise OracleError("tree is not projective")
        if t != SHIFT:
            dep = config.stack[-2] if t.startswith("LA") else config.stack[-1]
            pending[full[dep]] -= 1
        config.apply(t)
        out.append(t)
    return out


def _oracle_step(config, full, labels, pending) -> str | None:
    stack = config.stack
    if len(stack) >= 2:
        s0, s1 = stack[-1], stack[-2]
        if s1 != 0 and full[s1] == s0:
            return left_arc(labels[s1 - 1])
        if full[s0] == s1 and pending[s0] == 0:
            return right_arc(ROOT_LABEL if s1 == 0 else labels[s0 - 1])
    if not config.buffer_empty:
        return SHIFT
    return None


def replay(n: int, transitions: Sequence[str]) -> tuple[list[int], list[str]]:
    config = Configuration(n)
    for t in transitions:
        config.apply(t)
    return config.heads[1:], config.labels[1:]


# -- features -------------------------------------------------------------

_ROOT_NODE = ("<ROOT>", "<ROOT>")
_NONE_NODE = ("<NONE>", "<NONE>")


def _bucket(d: int) -> str:
    return str(d) if d <= 3 else ">3"


def extract_features(config: Configuration, nodes: Sequence[Node]) -> list[str]:
    """Template v1: UPOS and chunk type of s0, s1, b0, b1, pairs of these,
    the s1-s0 distance bucket, and the labels of the outermost children of
    s0 and s1."""
    def node(i):
        if i is None:
            return _NONE_NODE
        return _ROOT_NODE if i == 0 else nodes[i - 1]

    stack = config.stack
    s0i = stack[-1] if len(stack) >= 1 else None
    s1i = stack[-2] if len(stack) >= 2 else None
    b0i = config.next if config.next <= config.n else None
    b1i = config.next + 1 if config.next + 1 <= config.n else None
    (s0p, s0c), (s1p, s1c) = node(s0i), node(s1i)
    (b0p, b0c), (b1p, b1c) = node(b0i), node(b1i)
    if s1i is None:
        dist = "none"
    elif s1i == 0:
        dist = "root"
    else:
        dist = _bucket(s0i - s1i)

    def child_label(i, side):
        if not i:
            return "<NONE>"
        kids = (config.left if side == "l" else config.right)[i]
        if not kids:
            return "<NONE>"
        return config.labels[min(kids) if side == "l" else max(kids)]

    s0l, s0r = child_label(s0i, "l"), child_label(s0i, "r")
    s1l, s1r = child_label(s1i, "l"), child_label(s1i, "r")
    return [
        "bias",
        f"s0p={s0p}", f"s0c={s0c}", f"s0pc={s0p},{s0c}",
        f"s1p={s1p}", f"s1c={s1c}", f"s1pc={s1p},{s1c}",
        f"b0p={b0p}", f"b0c={b0c}", f"b0pc={b0p},{b0c}",
        f"b1p={b1p}", f"b1c={b1c}",
        f"s0p,s1p={s0p},{s1p}", f"s0c,s1c={s0c},{s1c}",
        f"s0pc,s1pc={s0p},{s0c},{s1p},{s1c}",
        f"s0p,b0p={s0p},{b0p}", f"s0c,b0c={s0c},{b0c}",
        f"s1p,b0p={s1p},{b0p}", f"b0p,b1p={b0p},{b1p}",
        f"s0p,s1p,b0p={s0p},{s1p},{b0p}",
        f"d={dist}", f"d,s0p,s1p={dist},{s0p},{s1p}", f"d,s0c,s1c={dist},{s0c},{s1c}",
        f"s0l={s0l}", f"s0r={s0r}", f"s1l={s1l}", f"s1r={s1r}",
        f"s0p,s0l,s0r={s0p},{s0l},{s0r}", f"s1p,s1l,s1r={s1p},{s1l},{s1r}",
    ]


# -- model ----------------------------------------------------------------

@dataclass
class ParserModel:
    label_set: tuple[str, ...]
    feature_weights: dict[str, dict[str, float]] = field(default_factory=dict)
    level: str = "chunk"
    version: int = MODEL_VERSION
    meta: dict[str, str] = field(default_factory=dict)

    @property
    def arc_labels(self) -> tuple[str, ...]:
        return self.label_set or (FALLBACK_LABEL,)

    def to_text(self) -> str:
        meta = dict(self.meta)
        meta["labels"] = ",".join(self.label_set)
        meta["level"] = self.level
        meta["template"] = str(FEATURE_TEMPLATE_VERSION)
        return dump_model("parser", self.version, meta, self.feature_weights)

    @classmethod
    def from_text(cls, text: str) -> "ParserModel":
        meta, weights = load_model(text, "parser", MODEL_VERSION)
        if meta.get("template") != str(FEATURE_TEMPLATE_VERSION):
            raise ValueError(f"parser feature template {meta.get('template')!r} is not supported")
        labels = tuple(l for l in meta.pop("labels").split(",") if l)
        level = meta.pop("level")
        for key in ("kind", "version", "template"):
            meta.pop(key, None)
        return cls(labels, weights, level, MODEL_VERSION, meta)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "ParserModel":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))

    @property
    def training_errors(self) -> list[int]:
        raw = self.meta.get("epoch_errors", "")
        return [int(x) for x in raw.split(",") if x]


def _best(scores: dict[str, float], candidates: Sequence[str]) -> str:
    # highest score; ties go to the lexicographically smallest transition
    return min(candidates, key=lambda t: (-scores.get(t, 0.0), t))


def train_parser(trees: Sequence[Tree], epochs: int, seed: int = 0, level: str | None = None) -> ParserModel:
    """Train on gold trees; non-projective trees are projectivized first."""
    if not trees:
        raise ValueError("empty training set")
    if epochs < 0:
        raise ValueError("epochs must be non-negative")
    if level is None:
        level = "chunk" if isinstance(trees[0], ChunkLevelTree) else "word"

    data = []
    labels = set()
    lifted = total = 0
    for tree in trees:
        inst = instance_from(tree)
        proj = projectivize_heads(inst.heads)
        lifted += sum(1 for a, b in zip(proj, inst.heads) if a != b)
        total += len(proj)
        inst = ParseInstance(inst.nodes, tuple(proj), inst.labels)
        labels.update(l for h, l in zip(inst.heads, inst.labels) if h != 0)
        data.append((inst, static_oracle(inst.heads, inst.labels)))
    labels.discard(ROOT_LABEL)
    label_set = tuple(sorted(labels))
    arc_labels = label_set or (FALLBACK_LABEL,)
    if lifted:
        logger.info("event=projectivize lifted_arcs=%d total_arcs=%d", lifted, total)

    weights = AveragedWeights()
    rng = random.Random(seed)
    order = list(range(len(data)))
    epoch_errors = []
    for epoch in range(epochs):
        rng.shuffle(order)
        errors = 0
        for idx in order:
            inst, gold_seq = data[idx]
            config = Configuration(len(inst.nodes))
            for gold in gold_seq:
                feats = extract_features(config, inst.nodes)
                guess = _best(score(weights.weights, feats), config.valid(arc_labels))
                if guess != gold:
                    errors += 1
                    for f in feats:
                        weights.update(f, gold, 1.0)
                        weights.update(f, guess, -1.0)
                weights.tick()
                config.apply(gold)
        epoch_errors.append(errors)
        logger.debug("event=parser_epoch epoch=%d transition_errors=%d", epoch + 1, errors)

    meta = {
        "seed": str(seed),
        "epochs": str(epochs),
        "trees": str(len(data)),
        "lifted_arcs": str(lifted),
        "epoch_errors": ",".join(map(str, epoch_errors)),
    }
    return ParserModel(label_set, weights.averaged(), level, MODEL_VERSION, meta)


def parse(model: ParserModel, nodes: Sequence[Node], beam_width: int = 1) -> list[tuple[int, str]]:
    """Parse a node sequence; returns ``(head, label)`` for nodes 1..n.

    Only valid transitions are scored, so the result is always a single
    rooted tree, reached after exactly 2n transitions.
    """
    if not nodes:
        raise ValueError("cannot parse an empty sequence")
    if beam_width < 1:
        raise ValueError("beam width must be positive")
    labels = model.arc_labels
    beam = [(0.0, (), Configuration(len(nodes)))]
    while not all(c.terminal for _, _, c in beam):
        expanded = []
        for total, history, config in beam:
            scores = score(model.feature_weights, extract_features(config, nodes))
            candidates = config.valid(labels)
            if beam_width == 1:
                candidates = [_best(scores, candidates)]
            for t in candidates:
                expanded.append((total + scores.get(t, 0.0), history + (t,), config))
        expanded.sort(key=lambda item: (-item[0], item[1]))
        beam = []
        for total, history, config in expanded[:beam_width]:
            config = config.copy() if beam_width > 1 else config
            config.apply(history[-1])
            beam.append((total, history, config))
    config = beam[0][2]
    return list(zip(config.heads[1:], config.labels[1:]))
