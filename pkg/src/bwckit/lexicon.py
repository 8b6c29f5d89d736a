"""Behavioral indicator lexicon: category -> word/phrase lists.

Shared by the text feature extractor and the insight indicator scores.
Hit rates are phrase occurrences (overlapping, counted over the token
stream) divided by the token count, clamped to [0, 1].
"""

from __future__ import annotations

from pathlib import Path

import yaml

from .quality import tokenize

Lexicon = dict[str, list[tuple[str, ...]]]  # category -> tokenized phrases


class LexiconError(ValueError):
    pass


def load_lexicon(path: str | Path) -> Lexicon:
    """Load a category -> phrase-list mapping from a YAML file.

    Category order in the file is preserved; it determines feature
    component order.
    """
    raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, dict) or not raw:
        raise LexiconError(f"lexicon {path} must be a non-empty category mapping")
    return compile_lexicon(raw)


def compile_lexicon(raw: dict[str, list[str]]) -> Lexicon:
    if not raw:
        raise LexiconError("empty lexicon")
    lexicon: Lexicon = {}
    for category, phrases in raw.items():
        compiled = []
        for phrase in phrases or []:
            tokens = tokenize(str(phrase)).tokens
            if tokens:
                compiled.append(tokens)
        lexicon[str(category)] = compiled
    return lexicon


def default_lexicon_path() -> Path:
    return Path(__file__).parent / "data" / "default_lexicon.yaml"


def count_phrase(tokens: tuple[str, ...], phrase: tuple[str, ...]) -> int:
    """Occurrences of a token n-gram, overlapping matches included."""
    k = len(phrase)
    if k == 0 or k > len(tokens):
        return 0
    return sum(1 for i in range(len(tokens) - k + 1) if tokens[i : i + k] == phrase)


def category_hit_counts(tokens: tuple[str, ...], lexicon: Lexicon) -> dict[str, int]:
    """Per-category phrase hit counts over one token stream."""
    if not lexicon:
        raise LexiconError("empty lexicon")
    return {
        category: sum(count_phrase(tokens, phrase) for phrase in phrases)
        for category, phrases in lexicon.items()
    }


def aggregate_hit_rates(
    token_groups: list[tuple[str, ...]], lexicon: Lexicon
) -> dict[str, float]:
    """Normalized per-category hit rates over several token groups.

    Phrases are matched within each group (a group is typically one
    transcript segment), never across group boundaries, so any reordering
    of the groups yields identical rates. Rates are clamped to [0, 1].
    """
    if not lexicon:
        raise LexiconError("empty lexicon")
    totals = {category: 0 for category in lexicon}
    n = 0
    for tokens in token_groups:
        n += len(tokens)
        for category, hits in category_hit_counts(tokens, lexicon).items():
            totals[category] += hits
    if n == 0:
        return {category: 0.0 for category in lexicon}
    return {category: min(1.0, hits / n) for category, hits in totals.items()}


def category_hit_rates(tokens: tuple[str, ...], lexicon: Lexicon) -> dict[str, float]:
    """Normalized per-category hit rate over one token stream."""
    return aggregate_hit_rates([tokens], lexicon)
