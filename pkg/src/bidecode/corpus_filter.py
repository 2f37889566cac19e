"""Heuristic filtering of parallel corpora.

Five rules run in a fixed order and the first one a pair fails is the one
charged in the report:

1. ``language``: both sides must be identified as the expected language;
2. ``length``: each side has between ``min_tokens`` and ``max_tokens`` tokens;
3. ``duplicate``: the tokenized (source, target) pair was not seen before;
4. ``ratio``: source/target token ratio within ``[1/max_ratio, max_ratio]``;
5. ``repeat``: no token makes up more than ``repeat_fraction`` of a side.

All bounds are inclusive of the boundary value (only strictly larger or
smaller values are rejected).
"""
import json
import logging
from collections import Counter
from dataclasses import dataclass, field

from . import ngram_lm
from .tokenize import tokenize

logger = logging.getLogger(__name__)

RULES = ("language", "length", "duplicate", "ratio", "repeat")
UNKNOWN = "unknown"
SPACE = "▁"


@dataclass(frozen=True)
class SentencePair:
    source: tuple
    target: tuple
    raw_source: str
    raw_target: str

    @classmethod
    def from_lines(cls, src, tgt):
        src = src.rstrip("\r\n")
        tgt = tgt.rstrip("\r\n")
        return cls(tuple(tokenize(src)), tuple(tokenize(tgt)), src, tgt)


@dataclass(frozen=True)
class FilterConfig:
    max_tokens: int = 120
    min_tokens: int = 3
    max_ratio: float = 3.5
    repeat_fraction: float = 0.30
    source_lang: str = None
    target_lang: str = None
    enabled: tuple = RULES

    def __post_init__(self):
        if not self.max_tokens > self.min_tokens >= 1:
            raise ValueError("need max_tokens > min_tokens >= 1")
        if not self.max_ratio > 1:
            raise ValueError("max_ratio must be > 1")
        if not 0 < self.repeat_fraction < 1:
            raise ValueError("repeat_fraction must lie in (0, 1)")
        unknown = set(self.enabled) - set(RULES)
        if unknown:
            raise ValueError(f"unknown rules {sorted(unknown)}")


@dataclass
class FilterReport:
    input: int = 0
    retained: int = 0
    rejected: dict = field(default_factory=lambda: {r: 0 for r in RULES})
    rule_order: tuple = RULES

    def to_dict(self):
        return {"input": self.input, "retained": self.retained,
                "rejected": dict(self.rejected), "rule_order": list(self.rule_order)}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


def _chars(text):
    return [SPACE if c.isspace() else c for c in " ".join(text.lower().split())]


class LanguageIdentifier:
    """Character 3-gram language identifier built on :mod:`bidecode.ngram_lm`.

    Args:
        models: ``{lang_code: NgramModel}`` over characters, normally from
            :meth:`train`.
    """

    def __init__(self, models):
        if len(models) < 2:
            raise ValueError("language identification needs at least two languages")
        self.models = dict(models)

    @classmethod
    def train(cls, seed_texts, order=3):
        """Build from ``{lang_code: [line, ...]}`` of raw seed text."""
        models = {}
        for lang, lines in sorted(seed_texts.items()):
            corpus = [_chars(line) for line in lines if line.strip()]
            models[lang] = ngram_lm.train(corpus, order=order)
        return cls(models)

    def scores(self, text):
        """Per-character log10 probability of ``text`` under each language."""
        chars = _chars(text)
        return {lang: m.sentence_logprob(chars) / (len(chars) + 1)
                for lang, m in self.models.items()}

    def detect(self, text):
        if isinstance(text, (list, tuple)):
            text = " ".join(text)
        if not any(c.isalpha() for c in text):
            return UNKNOWN
        scores = self.scores(text)
        best = max(scores.values())
        winners = [lang for lang, s in scores.items() if s == best]
        return winners[0] if len(winners) == 1 else UNKNOWN


def detect_language(sentence, lang_models):
    """Most likely language code of ``sentence`` or ``"unknown"``.

    ``lang_models`` is a :class:`LanguageIdentifier` or a mapping of
    language codes to character n-gram models.
    """
    ident = lang_models if isinstance(lang_models, LanguageIdentifier) else LanguageIdentifier(lang_models)
    return ident.detect(sentence)


def _max_token_share(tokens):
    return Counter(tokens).most_common(1)[0][1] / len(tokens)


def check_rule(rule, pair, config, langid=None, seen=None):
    """True when ``pair`` passes ``rule``. ``seen`` is only read, never updated."""
    src, tgt = pair.source, pair.target
    if rule == "language":
        if langid is None:
            return True
        return (langid.detect(pair.raw_source) == config.source_lang
                and langid.detect(pair.raw_target) == config.target_lang)
    if rule == "length":
        return all(config.min_tokens <= len(s) <= config.max_tokens for s in (src, tgt))
    if rule == "duplicate":
        return seen is None or (src, tgt) not in seen
    if rule == "ratio":
        if not src or not tgt:
            return False
        return (len(src) / len(tgt) <= config.max_ratio
                and len(tgt) / len(src) <= config.max_ratio)
    if rule == "repeat":
        return all(s and _max_token_share(s) <= config.repeat_fraction for s in (src, tgt))
    raise ValueError(f"unknown rule {rule!r}")


def filter_pair(pair, config, dedup_state, langid=None):
    """Return ``None`` to keep ``pair`` or the name of the first rule it fails.

    ``dedup_state`` is a set that receives every pair reaching the duplicate
    rule, so the first occurrence of a pair is kept and later ones rejected.
    """
    for rule in RULES:
        if rule not in config.enabled:
            continue
        if rule == "language" and langid is None:
            continue
        if not check_rule(rule, pair, config, langid, dedup_state):
            return rule
        if rule == "duplicate":
            dedup_state.add((pair.source, pair.target))
    return None


def run_pipeline(source_lines, target_lines, config=None, langid=None):
    """Filter aligned line lists.

    Returns:
        (kept pairs, FilterReport).

    Raises:
        ValueError: the two sides have different line counts.
    """
    config = config or FilterConfig()
    source_lines, target_lines = list(source_lines), list(target_lines)
    if len(source_lines) != len(target_lines):
        raise ValueError(f"line-count mismatch: {len(source_lines)} source vs "
                         f"{len(target_lines)} target lines")
    if langid is not None and (config.source_lang is None or config.target_lang is None):
        raise ValueError("language filtering needs source_lang and target_lang")
    report = FilterReport(input=len(source_lines))
    seen = set()
    kept = []
    for s, t in zip(source_lines, target_lines):
        pair = SentencePair.from_lines(s, t)
        rule = filter_pair(pair, config, seen, langid)
        if rule is None:
            kept.append(pair)
        else:
            report.rejected[rule] += 1
    report.retained = len(kept)
    logger.info("kept %d of %d pairs", report.retained, report.input)
    return kept, report


def _read_lines(path):
    with open(path, encoding="utf-8") as f:
        return f.read().splitlines()


def filter_files(src_path, tgt_path, out_src, out_tgt, config=None, langid=None):
    """File-level :func:`run_pipeline`; writes the raw retained lines."""
    src, tgt = _read_lines(src_path), _read_lines(tgt_path)
    kept, report = run_pipeline(src, tgt, config, langid)
    with open(out_src, "w", encoding="utf-8") as fs, open(out_tgt, "w", encoding="utf-8") as ft:
        for pair in kept:
            fs.write(pair.raw_source + "\n")
            ft.write(pair.raw_target + "\n")
    return report

