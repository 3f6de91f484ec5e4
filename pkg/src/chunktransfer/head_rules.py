"""Rule-based chunk head identification.

A rule set maps each chunk type to a priority list of UPOS tags and a
direction.  Rule files are line oriented::

    # comment
    VERSION = 1
    NP = NOUN,PROPN,PRON ; Rightmost
    VP = VERB,AUX ; Rightmost
    FALLBACK = Rightmost

Chunk types without a rule use the fallback direction over the whole span.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

from .chunks import CHUNK_TYPES
from .conllu import UPOS_TAGS

RULES_VERSION = 1
DIRECTIONS = ("Leftmost", "Rightmost")


class RuleConfigError(ValueError):
    pass


@dataclass(frozen=True)
class HeadRule:
    chunk_type: str
    priority: tuple[str, ...]
    direction: str = "Rightmost"

    def __post_init__(self):
        if not self.priority:
            raise RuleConfigError(f"{self.chunk_type}: empty priority list")
        if self.direction not in DIRECTIONS:
            raise RuleConfigError(f"{self.chunk_type}: bad direction {self.direction!r}")


@dataclass(frozen=True)
class HeadRuleSet:
    rules: Mapping[str, HeadRule] = field(default_factory=dict)
    fallback_direction: str = "Rightmost"
    name: str = "custom"
    version: int = RULES_VERSION

    def rule_for(self, chunk_type: str) -> HeadRule | None:
        return self.rules.get(chunk_type)

    def to_text(self) -> str:
        lines = [f"VERSION = {self.version}"]
        for ctype in CHUNK_TYPES:
            rule = self.rules.get(ctype)
            if rule:
                lines.append(f"{ctype} = {','.join(rule.priority)} ; {rule.direction}")
        lines.append(f"FALLBACK = {self.fallback_direction}")
        return "\n".join(lines) + "\n"


def _pick(positions: Sequence[int], direction: str) -> int:
    return max(positions) if direction == "Rightmost" else min(positions)


def identify_head(span: Sequence[tuple[int, str]], chunk_type: str, rules: HeadRuleSet) -> int:
    """Return the position of the head token among ``(position, upos)`` pairs."""
    if not span:
        raise ValueError("cannot identify the head of an empty span")
    rule = rules.rule_for(chunk_type)
    if rule is not None:
        for tag in rule.priority:
            matches = [pos for pos, upos in span if upos == tag]
            if matches:
                return _pick(matches, rule.direction)
    return _pick([pos for pos, _ in span], rules.fallback_direction)


def _parse_direction(value: str, lineno: int) -> str:
    value = value.strip()
    for d in DIRECTIONS:
        if value.lower() == d.lower():
            return d
    raise RuleConfigError(f"line {lineno}: unknown direction {value!r}")


def load_rules(text: str, fallback: str | None = None, name: str = "custom") -> HeadRuleSet:
    """Parse a rule config.  ``fallback`` is used when the text sets none."""
    rules: dict[str, HeadRule] = {}
    version = RULES_VERSION
    fallback_direction = fallback
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise RuleConfigError(f"line {lineno}: expected KEY = VALUE")
        key = key.strip().upper()
        if key == "VERSION":
            try:
                version = int(value)
            except ValueError:
                raise RuleConfigError(f"line {lineno}: bad version {value.strip()!r}") from None
            if version != RULES_VERSION:
                raise RuleConfigError(f"unsupported rule file version {version}")
        elif key == "FALLBACK":
            fallback_direction = _parse_direction(value, lineno)
        elif key in CHUNK_TYPES:
            if key in rules:
                raise RuleConfigError(f"line {lineno}: duplicate rule for {key}")
            tags_part, _, dir_part = value.partition(";")
            tags = tuple(t.strip() for t in tags_part.split(",") if t.strip())
            for tag in tags:
                if tag not in UPOS_TAGS:
                    raise RuleConfigError(f"line {lineno}: unknown upos tag {tag!r}")
            direction = _parse_direction(dir_part, lineno) if dir_part.strip() else "Rightmost"
            rules[key] = HeadRule(key, tags, direction)
        else:
            raise RuleConfigError(f"line {lineno}: unknown chunk type {key!r}")

    if fallback_direction is None:
        missing = [c for c in CHUNK_TYPES if c not in rules]
        if missing:
            raise RuleConfigError(f"no rule for {', '.join(missing)} and no FALLBACK given")
        fallback_direction = "Rightmost"
    return HeadRuleSet(rules, fallback_direction, name, version)


def rules_path(language: str = "default") -> Path:
    return Path(str(resources.files("chunktransfer") / "rules" / f"{language}.rules"))


def load_language_rules(language: str = "default", rules_dir: str | Path | None = None) -> HeadRuleSet:
    """Load ``<language>.rules`` from ``rules_dir`` (or the shipped set),
    falling back to ``default.rules`` when the language has no file."""
    base = Path(rules_dir) if rules_dir else rules_path().parent
    path = base / f"{language}.rules"
    if not path.exists():
        path = base / "default.rules"
        if not path.exists():
            path = rules_path("default")
    return load_rules(path.read_text(encoding="utf-8"), name=path.stem)


def default_rules() -> HeadRuleSet:
    return load_language_rules("default")
