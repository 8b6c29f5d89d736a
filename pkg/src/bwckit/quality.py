"""Transcript quality metrics and two-model corpus comparison.

Four artifact signals, computed per transcript against a counterpart from
a second transcription model:

* content coverage gap: fraction of one transcript's unique words absent
  from the counterpart (directional; both directions are reported)
* repeated lines: total occurrences of any normalized line repeated at
  or above a threshold, a fingerprint of looped decoder output
* non-standard characters: anything outside a fixed, versioned set of
  ASCII letters, digits, whitespace, and common punctuation
* out-of-dictionary words: tokens missing from a supplied wordlist

Coverage gaps default to unique-word (type) counting; ``gap_mode="tokens"``
switches to occurrence counting for sensitivity analysis.
"""

from __future__ import annotations

import json
import re
import string
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

# Version 1 of the standard character set. Frozen: changing it changes
# every historical metric, so bump the version instead of editing in place.
STANDARD_CHARSET_VERSION = 1
STANDARD_CHARS = frozenset(string.ascii_letters + string.digits + " \t\n\r\v\f" + ".,;:'\"?!-()")

DEFAULT_REPEAT_THRESHOLD = 3

# Word tokens: runs of letters/digits joined by internal apostrophes.
_TOKEN_RE = re.compile(r"[^\W_]+(?:'[^\W_]+)*", re.UNICODE)


class DictionaryError(ValueError):
    """Raised when OOV detection is attempted without a dictionary."""


class PairingError(ValueError):
    """Raised when two corpora cannot be paired by transcript id."""

    def __init__(self, orphans_a: list[str], orphans_b: list[str]):
        self.orphans_a = orphans_a
        self.orphans_b = orphans_b
        parts = []
        if orphans_a:
            parts.append(f"only in corpus A: {', '.join(orphans_a)}")
        if orphans_b:
            parts.append(f"only in corpus B: {', '.join(orphans_b)}")
        super().__init__("unpaired transcripts: " + "; ".join(parts))


@dataclass(frozen=True)
class TokenizedTranscript:
    source_id: str
    tokens: tuple[str, ...]
    lines: tuple[str, ...]


@dataclass(frozen=True)
class QualityMetrics:
    coverage_gap_vs_counterpart: float
    repeated_line_count: int
    nonstandard_char_count: int
    oov_words: tuple[str, ...]
    word_count: int

    def to_dict(self) -> dict:
        return {
            "coverage_gap_vs_counterpart": self.coverage_gap_vs_counterpart,
            "repeated_line_count": self.repeated_line_count,
            "nonstandard_char_count": self.nonstandard_char_count,
            "oov_words": list(self.oov_words),
            "word_count": self.word_count,
        }


def tokenize(text: str, source_id: str = "") -> TokenizedTranscript:
    """Case-fold and split into word tokens; keep raw line boundaries."""
    folded = text.casefold()
    return TokenizedTranscript(
        source_id=source_id,
        tokens=tuple(_TOKEN_RE.findall(folded)),
        lines=tuple(text.splitlines()),
    )


def coverage_gap(a: TokenizedTranscript, b: TokenizedTranscript, mode: str = "types") -> float:
    """Fraction of a's words that b lacks. Directional: gap(a,b) != gap(b,a).

    ``types`` counts unique words; ``tokens`` counts occurrences.
    Defined as 0.0 when a has no tokens.
    """
    if mode not in {"types", "tokens"}:
        raise ValueError(f"unknown coverage mode {mode!r}")
    if not a.tokens:
        return 0.0
    b_vocab = set(b.tokens)
    if mode == "types":
        a_vocab = set(a.tokens)
        return len(a_vocab - b_vocab) / len(a_vocab)
    missing = sum(1 for tok in a.tokens if tok not in b_vocab)
    return missing / len(a.tokens)


def _normalize_line(line: str) -> str:
    return line.strip().casefold()


def repeated_lines(t: TokenizedTranscript, threshold: int = DEFAULT_REPEAT_THRESHOLD) -> int:
    """Total occurrences of normalized lines repeated >= threshold times."""
    if threshold < 2:
        raise ValueError("repetition threshold must be >= 2")
    counts = Counter(_normalize_line(line) for line in t.lines)
    return sum(n for n in counts.values() if n >= threshold)


def nonstandard_chars(t: TokenizedTranscript) -> int:
    """Count characters outside the versioned standard set."""
    return sum(1 for line in t.lines for ch in line if ch not in STANDARD_CHARS)


def oov_words(t: TokenizedTranscript, dictionary: frozenset[str] | set[str]) -> tuple[str, ...]:
    """Unique tokens absent from the dictionary, sorted lexicographically."""
    if not dictionary:
        raise DictionaryError("no dictionary loaded")
    return tuple(sorted(set(t.tokens) - set(dictionary)))


def load_wordlist(path: str | Path) -> frozenset[str]:
    """Load a plain one-word-per-line dictionary file, case-folded."""
    words = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            word = line.strip().casefold()
            if word:
                words.add(word)
    return frozenset(words)


def transcript_metrics(
    t: TokenizedTranscript,
    counterpart: TokenizedTranscript,
    dictionary: frozenset[str] | set[str],
    threshold: int = DEFAULT_REPEAT_THRESHOLD,
    gap_mode: str = "types",
) -> QualityMetrics:
    return QualityMetrics(
        coverage_gap_vs_counterpart=coverage_gap(t, counterpart, mode=gap_mode),
        repeated_line_count=repeated_lines(t, threshold),
        nonstandard_char_count=nonstandard_chars(t),
        oov_words=oov_words(t, dictionary),
        word_count=len(t.tokens),
    )


@dataclass(frozen=True)
class PairMetrics:
    source_id: str
    a: QualityMetrics
    b: QualityMetrics


@dataclass
class ComparisonReport:
    """Per-pair metrics plus corpus averages for a two-model comparison."""

    model_a_name: str
    model_b_name: str
    pairs: list[PairMetrics]
    mean_word_count: dict[str, float] = field(default_factory=dict)
    mean_nonstandard_chars: dict[str, float] = field(default_factory=dict)
    mean_repeated_lines: dict[str, float] = field(default_factory=dict)
    mean_coverage_gap_a_vs_b: float = 0.0
    mean_coverage_gap_b_vs_a: float = 0.0

    @property
    def sample_size(self) -> int:
        return len(self.pairs)

    def panel_table(self) -> list[tuple[str, str, float]]:
        """Three-panel table rows: (panel, model, mean value)."""
        rows = []
        for panel, means in (
            ("word_count", self.mean_word_count),
            ("nonstandard_chars", self.mean_nonstandard_chars),
            ("repeated_lines", self.mean_repeated_lines),
        ):
            rows.append((panel, self.model_a_name, means["a"]))
            rows.append((panel, self.model_b_name, means["b"]))
        return rows

    def to_dict(self) -> dict:
        return {
            "model_a": self.model_a_name,
            "model_b": self.model_b_name,
            "sample_size": self.sample_size,
            "mean_word_count": self.mean_word_count,
            "mean_nonstandard_chars": self.mean_nonstandard_chars,
            "mean_repeated_lines": self.mean_repeated_lines,
            "mean_coverage_gap_a_vs_b": self.mean_coverage_gap_a_vs_b,
            "mean_coverage_gap_b_vs_a": self.mean_coverage_gap_b_vs_a,
            "pairs": [
                {"source_id": p.source_id, "a": p.a.to_dict(), "b": p.b.to_dict()}
                for p in self.pairs
            ],
        }


def compare_models(
    corpus_a: list[TokenizedTranscript],
    corpus_b: list[TokenizedTranscript],
    dictionary: frozenset[str] | set[str],
    model_a_name: str = "model-a",
    model_b_name: str = "model-b",
    threshold: int = DEFAULT_REPEAT_THRESHOLD,
    gap_mode: str = "types",
) -> ComparisonReport:
    """Pair two corpora by transcript id and compare the models.

    Raises :class:`PairingError` listing orphan ids when the corpora do
    not pair up one-to-one.
    """
    by_id_a = {t.source_id: t for t in corpus_a}
    by_id_b = {t.source_id: t for t in corpus_b}
    if len(by_id_a) != len(corpus_a) or len(by_id_b) != len(corpus_b):
        raise PairingError([], [])  # duplicate ids make pairing ambiguous
    orphans_a = sorted(set(by_id_a) - set(by_id_b))
    orphans_b = sorted(set(by_id_b) - set(by_id_a))
    if orphans_a or orphans_b:
        raise PairingError(orphans_a, orphans_b)
    if not by_id_a:
        raise ValueError("cannot compare empty corpora")

    pairs = []
    for source_id in sorted(by_id_a):
        ta, tb = by_id_a[source_id], by_id_b[source_id]
        pairs.append(
            PairMetrics(
                source_id=source_id,
                a=transcript_metrics(ta, tb, dictionary, threshold, gap_mode),
                b=transcript_metrics(tb, ta, dictionary, threshold, gap_mode),
            )
        )

    n = len(pairs)
    report = ComparisonReport(
        model_a_name=model_a_name,
        model_b_name=model_b_name,
        pairs=pairs,
        mean_word_count={
            "a": sum(p.a.word_count for p in pairs) / n,
            "b": sum(p.b.word_count for p in pairs) / n,
        },
        mean_nonstandard_chars={
            "a": sum(p.a.nonstandard_char_count for p in pairs) / n,
            "b": sum(p.b.nonstandard_char_count for p in pairs) / n,
        },
        mean_repeated_lines={
            "a": sum(p.a.repeated_line_count for p in pairs) / n,
            "b": sum(p.b.repeated_line_count for p in pairs) / n,
        },
        mean_coverage_gap_a_vs_b=sum(p.a.coverage_gap_vs_counterpart for p in pairs) / n,
        mean_coverage_gap_b_vs_a=sum(p.b.coverage_gap_vs_counterpart for p in pairs) / n,
    )
    return report


def write_report(report: ComparisonReport, path: str | Path) -> None:
    """Write the structured report plus a plot-data table next to it."""
    path = Path(path)
    path.write_text(json.dumps(report.to_dict(), indent=2, ensure_ascii=False), encoding="utf-8")
    panel_path = path.with_suffix(".panels.tsv")
    lines = ["panel\tmodel\tmean"]
    lines += [f"{panel}\t{model}\t{value:.3f}" for panel, model, value in report.panel_table()]
    panel_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
