"""Glossary compilation, term matching, and term-usage evaluation.

Glossary rules: keep (source, target) pairs seen at least twice, source
n-grams up to 5 tokens, one target per source (highest frequency, ties to
the lexicographically smaller target), stopwords excluded, sorted longest
n-gram first so longer terms take priority in prompts.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import EmptyInput, InconsistentCounts, NoTermsParsed
from .types import LangCode, TermPair, ngram_len

MAX_SOURCE_NGRAM = 5
MIN_GLOSSARY_FREQUENCY = 2

_NUMBERING_RE = re.compile(r"^\s*\d+\s*[.)]\s*")


@dataclass(frozen=True)
class Glossary:
    entries: tuple[TermPair, ...]
    src_lang: LangCode | None = None
    tgt_lang: LangCode | None = None

    def __post_init__(self):
        seen: set[str] = set()
        for entry in self.entries:
            if entry.frequency < MIN_GLOSSARY_FREQUENCY:
                raise InconsistentCounts(
                    f"glossary entry {entry.source_term!r} has frequency {entry.frequency}"
                )
            if entry.src_ngram_len > MAX_SOURCE_NGRAM:
                raise InconsistentCounts(
                    f"glossary entry {entry.source_term!r} exceeds {MAX_SOURCE_NGRAM}-gram"
                )
            if entry.source_term in seen:
                raise InconsistentCounts(f"duplicate glossary source {entry.source_term!r}")
            seen.add(entry.source_term)
        object.__setattr__(self, "entries", tuple(self.entries))

    def __len__(self) -> int:
        return len(self.entries)


def glossary_sort_key(entry: TermPair) -> tuple[int, int, str]:
    return (-entry.src_ngram_len, -entry.frequency, entry.source_term)


def parse_extracted_terms(llm_output: str, separator: str) -> list[TermPair]:
    """Parse ``N. source <sep> target`` lines; lines without both sides are skipped."""
    if not separator:
        raise NoTermsParsed("separator must be non-empty")
    pairs: list[TermPair] = []
    for line in llm_output.splitlines():
        line = _NUMBERING_RE.sub("", line).strip()
        if not line or separator not in line:
            continue
        src, _, tgt = line.partition(separator)
        src, tgt = src.strip(), tgt.strip()
        if not src or not tgt:
            continue
        pairs.append(TermPair(source_term=src, target_term=tgt))
    if not pairs:
        raise NoTermsParsed("no term pairs found in output")
    return pairs


def compile_glossary(
    raw_pairs: Iterable[TermPair | tuple[str, str]],
    stopwords: set[str] | frozenset[str] = frozenset(),
    src_lang: LangCode | None = None,
    tgt_lang: LangCode | None = None,
) -> Glossary:
    """Aggregate term-pair occurrences into a glossary under the standard rules."""
    folded_stopwords = {w.casefold() for w in stopwords}
    counts: dict[tuple[str, str], int] = {}
    for item in raw_pairs:
        if isinstance(item, TermPair):
            src, tgt, weight = item.source_term, item.target_term, item.frequency
        else:
            src, tgt = item
            weight = 1
        src, tgt = src.strip(), tgt.strip()
        if not src or not tgt:
            continue
        if src.casefold() in folded_stopwords or tgt.casefold() in folded_stopwords:
            continue
        if ngram_len(src) > MAX_SOURCE_NGRAM:
            continue
        counts[(src, tgt)] = counts.get((src, tgt), 0) + weight

    best_per_source: dict[str, tuple[int, str]] = {}
    for (src, tgt), freq in counts.items():
        incumbent = best_per_source.get(src)
        # Higher frequency wins; ties go to the lexicographically smaller target.
        if incumbent is None or (-freq, tgt) < (-incumbent[0], incumbent[1]):
            best_per_source[src] = (freq, tgt)

    entries = [
        TermPair(source_term=src, target_term=tgt, frequency=freq)
        for src, (freq, tgt) in best_per_source.items()
        if freq >= MIN_GLOSSARY_FREQUENCY
    ]
    entries.sort(key=glossary_sort_key)
    return Glossary(entries=tuple(entries), src_lang=src_lang, tgt_lang=tgt_lang)


def _strip_punct(token: str) -> str:
    start, end = 0, len(token)
    while start < end and unicodedata.category(token[start]).startswith("P"):
        start += 1
    while end > start and unicodedata.category(token[end - 1]).startswith("P"):
        end -= 1
    return token[start:end]


def _fold_tokens(text: str) -> list[str]:
    # Surrounding punctuation would otherwise block matches like "infection,".
    tokens = []
    for raw in text.casefold().split():
        token = _strip_punct(raw)
        if token:
            tokens.append(token)
    return tokens


def source_ngrams(source: str, max_n: int = MAX_SOURCE_NGRAM) -> set[str]:
    tokens = _fold_tokens(source)
    grams: set[str] = set()
    for n in range(1, max_n + 1):
        for i in range(len(tokens) - n + 1):
            grams.add(" ".join(tokens[i : i + n]))
    return grams


def match_terms(source: str, glossary: Glossary, max_terms: int,
                drop_overlapping: bool = False) -> list[TermPair]:
    """Glossary entries whose source term occurs among the source's 1..5-grams.

    Results keep glossary order (longest n-gram first) and are truncated to
    ``max_terms``; the truncated list is always a prefix of the full list.
    With ``drop_overlapping``, shorter matched terms contained in a longer
    matched term are removed before truncation.
    """
    if max_terms < 1:
        raise EmptyInput("max_terms must be >= 1")
    grams = source_ngrams(source)
    matched = [
        entry for entry in glossary.entries
        if " ".join(_fold_tokens(entry.source_term)) in grams
    ]
    if drop_overlapping:
        kept: list[TermPair] = []
        for entry in matched:
            folded = _fold_tokens(entry.source_term)
            contained = any(
                len(folded) < len(_fold_tokens(k.source_term))
                and _is_sub_ngram(folded, _fold_tokens(k.source_term))
                for k in matched
            )
            if not contained:
                kept.append(entry)
        matched = kept
    return matched[:max_terms]


def _is_sub_ngram(short: list[str], long: list[str]) -> bool:
    n = len(short)
    return any(long[i : i + n] == short for i in range(len(long) - n + 1))


class MatchMode(str, Enum):
    AUTO = "auto"
    WORD_BOUNDARY = "word_boundary"
    SUBSTRING = "substring"


_CJK_RANGES = (
    (0x2E80, 0x9FFF),    # CJK radicals .. unified ideographs
    (0x3040, 0x30FF),    # kana (inside the range above, kept for clarity)
    (0xAC00, 0xD7AF),    # hangul
    (0xF900, 0xFAFF),    # CJK compatibility
)


def _is_unspaced_script(text: str) -> bool:
    return any(a <= ord(ch) <= b for ch in text for a, b in _CJK_RANGES)


def term_used(translation: str, term: TermPair, mode: MatchMode = MatchMode.AUTO) -> bool:
    """Whether the required target term occurs in the translation.

    Default rule: case-insensitive match at word boundaries for spaced
    scripts, raw substring for unspaced scripts.
    """
    target = term.target_term
    if mode is MatchMode.AUTO:
        unspaced = _is_unspaced_script(target) or _is_unspaced_script(translation)
        mode = MatchMode.SUBSTRING if unspaced else MatchMode.WORD_BOUNDARY
    if mode is MatchMode.SUBSTRING:
        return target in translation
    pattern = r"(?<!\w)" + re.escape(target) + r"(?!\w)"
    return re.search(pattern, translation, flags=re.IGNORECASE) is not None


def missing_terms(translation: str, term_set: Sequence[TermPair],
                  mode: MatchMode = MatchMode.AUTO) -> list[TermPair]:
    """Terms of the set absent from the translation; empty means skip post-editing."""
    return [t for t in term_set if not term_used(translation, t, mode)]


# -- usage reporting -------------------------------------------------------


@dataclass(frozen=True)
class UsageRow:
    term_set: str
    total: int
    used: int

    def __post_init__(self):
        if self.total < 1:
            raise InconsistentCounts(f"term set {self.term_set!r} has total {self.total}")
        if not 0 <= self.used <= self.total:
            raise InconsistentCounts(
                f"term set {self.term_set!r}: used {self.used} outside [0, {self.total}]"
            )

    @property
    def pct(self) -> float:
        return 100.0 * self.used / self.total


@dataclass(frozen=True)
class TermUsageReport:
    rows: tuple[UsageRow, ...]
    avg_pct: float
    avg_pct_exact: float


def round_pct(value: float) -> float:
    """Half-up rounding to 2 decimals, as printed in evaluation tables."""
    return float(Decimal(repr(value)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def usage_report(
    rows: Mapping[str, tuple[int, int]] | Sequence[tuple[str, int, int]],
) -> TermUsageReport:
    """Average term-usage percentage over term sets (mean of per-set ratios)."""
    if isinstance(rows, Mapping):
        usage_rows = [UsageRow(name, total, used) for name, (total, used) in rows.items()]
    else:
        usage_rows = [UsageRow(name, total, used) for name, total, used in rows]
    if not usage_rows:
        raise EmptyInput("usage report needs at least one term set")
    exact = sum(r.pct for r in usage_rows) / len(usage_rows)
    return TermUsageReport(rows=tuple(usage_rows), avg_pct=round_pct(exact), avg_pct_exact=exact)


def cross_average(pcts: Iterable[float]) -> float:
    """Mean of per-language-pair averages, rounded half-up to 2 decimals.

    Pass the *unrounded* per-pair averages when they are available.
    """
    values = list(pcts)
    if not values:
        raise EmptyInput("cross average needs at least one value")
    return round_pct(sum(values) / len(values))


def count_usage(translations_with_terms: Sequence[tuple[str, Sequence[TermPair]]],
                mode: MatchMode = MatchMode.AUTO) -> tuple[int, int]:
    """(total, used) across translations, counting each required term once."""
    total = used = 0
    for translation, term_set in translations_with_terms:
        for term in term_set:
            total += 1
            if term_used(translation, term, mode):
                used += 1
    return total, used


# -- persistence -----------------------------------------------------------


def save_glossary_tsv(glossary: Glossary, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for entry in glossary.entries:
            fh.write(f"{entry.source_term}\t{entry.target_term}\t{entry.frequency}\n")


def load_glossary_tsv(path: str | Path, src_lang: LangCode | None = None,
                      tgt_lang: LangCode | None = None) -> Glossary:
    entries = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        src, tgt, freq = line.split("\t")
        entries.append(TermPair(source_term=src, target_term=tgt, frequency=int(freq)))
    entries.sort(key=glossary_sort_key)
    return Glossary(entries=tuple(entries), src_lang=src_lang, tgt_lang=tgt_lang)


def default_stopwords(lang_code: str) -> set[str]:
    """Shipped per-language stopword list; empty when no list exists."""
    try:
        text = (
            resources.files("adaptmt")
            .joinpath("data", "stopwords", f"{lang_code}.txt")
            .read_text(encoding="utf-8")
        )
    except (FileNotFoundError, ModuleNotFoundError, NotADirectoryError):
        return set()
    return {line.strip() for line in text.splitlines() if line.strip()}
