"""Streaming corpus preparation: filtering, synthetic generation, mixed sampling.

Every filter stage is a generator transformer paired with a FilterReport
that satisfies input == kept + sum(dropped) once the stream is drained.
Memory stays bounded by the dedup digest set, not the corpus size.
"""

from __future__ import annotations

import ast
import hashlib
import json
import math
import random
import re
import unicodedata
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence

from .embedding import Embedder, cosine
from .errors import (
    ConfigError,
    EmptyDataset,
    NegativeInput,
    NoValidRecords,
    PartialBatch,
    ProviderUnavailable,
)
from .types import LangCode, Origin, SamplingParams, TranslationUnit

_HTML_TAG_RE = re.compile(r"</?[a-zA-Z][^>]*>")
_SENTENCE_RE = re.compile(r"[^.!?。！？]+[.!?。！？]+[\"'”’»]?|[^.!?。！？]+$")
_NUMBERING_RE = re.compile(r"^\s*\d+\s*[.)]\s*")

RULE_DUPLICATE = "duplicate"
RULE_SOURCE_COPY = "source_copy"
RULE_LENGTH = "length"
RULE_RATIO = "ratio"
RULE_HTML = "html"
RULE_SEMANTIC = "semantic"
RULE_LANGUAGE = "language"


@dataclass(frozen=True)
class FilterConfig:
    max_len_words: int = 200
    max_ratio: float = 2.0
    sem_threshold: float = 0.45
    lid_threshold: float = 0.9
    drop_html: bool = True

    def __post_init__(self):
        if self.max_len_words < 1 or self.max_ratio < 1.0:
            raise ConfigError("max_len_words >= 1 and max_ratio >= 1.0 required")
        if not 0.0 <= self.lid_threshold <= 1.0:
            raise ConfigError("lid_threshold must be within [0, 1]")


@dataclass
class FilterReport:
    input: int = 0
    kept: int = 0
    dropped_by_rule: dict[str, int] = field(default_factory=dict)

    def drop(self, rule: str) -> None:
        self.dropped_by_rule[rule] = self.dropped_by_rule.get(rule, 0) + 1

    @property
    def dropped(self) -> int:
        return sum(self.dropped_by_rule.values())

    def to_dict(self) -> dict:
        return {"input": self.input, "kept": self.kept, "dropped_by_rule": dict(self.dropped_by_rule)}


def _is_mostly_unspaced(text: str) -> bool:
    compact = text.replace(" ", "")
    if not compact:
        return False
    cjk = sum(1 for ch in compact if 0x2E80 <= ord(ch) <= 0x9FFF or 0xAC00 <= ord(ch) <= 0xD7AF)
    return cjk * 2 > len(compact)


def word_count(text: str) -> int:
    """Whitespace tokens; ceil(chars / 2) for mostly-unspaced scripts."""
    if _is_mostly_unspaced(text):
        return max(1, math.ceil(len(text.replace(" ", "")) / 2))
    return len(text.split())


def pair_digest(source: str, target: str) -> bytes:
    normalized = unicodedata.normalize("NFC", source + "\x1f" + target)
    return hashlib.blake2b(normalized.encode("utf-8"), digest_size=16).digest()


def rule_filter(
    units: Iterable[TranslationUnit], cfg: FilterConfig = FilterConfig()
) -> tuple[Iterator[TranslationUnit], FilterReport]:
    """Drop duplicates, source copies, over-long pairs, bad ratios, HTML.

    The report is complete once the returned stream is drained.
    """
    report = FilterReport()

    def generate() -> Iterator[TranslationUnit]:
        seen: set[bytes] = set()
        for unit in units:
            report.input += 1
            digest = pair_digest(unit.source, unit.target)
            if digest in seen:
                report.drop(RULE_DUPLICATE)
                continue
            seen.add(digest)
            if unit.source.strip() == unit.target.strip():
                report.drop(RULE_SOURCE_COPY)
                continue
            src_words, tgt_words = word_count(unit.source), word_count(unit.target)
            if src_words > cfg.max_len_words or tgt_words > cfg.max_len_words:
                report.drop(RULE_LENGTH)
                continue
            longer, shorter = max(src_words, tgt_words), max(min(src_words, tgt_words), 1)
            if longer / shorter > cfg.max_ratio:
                report.drop(RULE_RATIO)
                continue
            if cfg.drop_html and (_HTML_TAG_RE.search(unit.source) or _HTML_TAG_RE.search(unit.target)):
                report.drop(RULE_HTML)
                continue
            report.kept += 1
            yield unit

    return generate(), report


def semantic_filter(
    units: Iterable[TranslationUnit], embedder: Embedder, threshold: float = 0.45
) -> tuple[Iterator[TranslationUnit], FilterReport]:
    """Keep pairs whose source/target embeddings reach the similarity threshold."""
    report = FilterReport()

    def generate() -> Iterator[TranslationUnit]:
        for unit in units:
            report.input += 1
            src_vec, tgt_vec = embedder.embed_batch([unit.source, unit.target])
            if cosine(src_vec, tgt_vec) >= threshold:
                report.kept += 1
                yield unit
            else:
                report.drop(RULE_SEMANTIC)

    return generate(), report


LidProvider = Callable[[str], tuple[str, float]]


def language_filter(
    units: Iterable[TranslationUnit], lid_provider: LidProvider, threshold: float = 0.9
) -> tuple[Iterator[TranslationUnit], FilterReport]:
    """Keep pairs where both sides detect as their declared language."""
    report = FilterReport()

    def generate() -> Iterator[TranslationUnit]:
        for unit in units:
            report.input += 1
            src_lang, src_conf = lid_provider(unit.source)
            tgt_lang, tgt_conf = lid_provider(unit.target)
            if (
                src_lang == unit.src_lang.code
                and tgt_lang == unit.tgt_lang.code
                and src_conf >= threshold
                and tgt_conf >= threshold
            ):
                report.kept += 1
                yield unit
            else:
                report.drop(RULE_LANGUAGE)

    return generate(), report


# -- mixed fine-tuning dataset assembly -------------------------------------


@dataclass(frozen=True)
class MixPlan:
    in_domain_weight: float = 0.9
    generic_weight: float = 0.1
    generic_sample_ratio: float = 9.0

    def __post_init__(self):
        if self.in_domain_weight <= 0.0 or self.generic_weight <= 0.0:
            raise ConfigError("mix weights must be positive")
        if abs(self.in_domain_weight + self.generic_weight - 1.0) > 1e-9:
            raise ConfigError("mix weights must sum to 1")
        if self.generic_sample_ratio <= 0.0:
            raise ConfigError("generic_sample_ratio must be positive")


class _CyclingPool:
    """Seeded shuffle-and-cycle over a list; reshuffles on exhaustion."""

    def __init__(self, items: Sequence, rng: random.Random):
        self.items = list(items)
        self.rng = rng
        self.order = list(range(len(self.items)))
        self.rng.shuffle(self.order)
        self.cursor = 0

    def draw(self):
        if self.cursor == len(self.order):
            self.rng.shuffle(self.order)
            self.cursor = 0
        item = self.items[self.order[self.cursor]]
        self.cursor += 1
        return item


def mixed_sample(
    in_domain: Sequence[TranslationUnit],
    generic: Sequence[TranslationUnit],
    plan: MixPlan = MixPlan(),
    seed: int = 0,
    n_draws: int = 0,
) -> Iterator[TranslationUnit]:
    """Weighted interleaving with oversampling of the smaller pool.

    The generic pool is first capped to ``generic_sample_ratio`` times the
    in-domain size (seeded random subset); each draw then picks a pool by
    weight and cycles it with reshuffle-on-exhaustion.
    """
    if not in_domain or not generic:
        raise EmptyDataset("both datasets must be non-empty")
    rng = random.Random(seed)
    cap = int(plan.generic_sample_ratio * len(in_domain))
    generic_used = list(generic)
    if cap and len(generic_used) > cap:
        generic_used = rng.sample(generic_used, cap)
    pools = (_CyclingPool(in_domain, rng), _CyclingPool(generic_used, rng))
    for _ in range(n_draws):
        pool = pools[0] if rng.random() < plan.in_domain_weight else pools[1]
        yield pool.draw()


# -- synthetic generation ----------------------------------------------------


@dataclass
class GenerationJob:
    prompts: list[str]
    # Provider contract: provider(prompt, params) -> list of generation texts.
    provider: Callable[[str, SamplingParams], list[str]]
    params: SamplingParams = SamplingParams(
        top_k=50, top_p=0.95, temperature=1.0, max_new_tokens=300, num_hypotheses=5
    )

    def __post_init__(self):
        if not self.prompts:
            raise ConfigError("generation job needs at least one prompt")


@dataclass(frozen=True)
class GenerationResult:
    prompt: str
    generations: tuple[tuple[str, ...], ...]  # per hypothesis: its sentences


def split_sentences(text: str) -> list[str]:
    """Rule-based split on terminal punctuation (Latin + CJK) plus closing quotes."""
    return [m.group().strip() for m in _SENTENCE_RE.finditer(text) if m.group().strip()]


def generate_synthetic(job: GenerationJob) -> list[GenerationResult]:
    """Run each prompt through the provider; sentence-split every generation.

    Raises PartialBatch (carrying successes) when some prompts fail, and
    ProviderUnavailable when all of them do.
    """
    results: list[GenerationResult] = []
    failures: list[tuple[str, str]] = []
    for prompt in job.prompts:
        try:
            generations = job.provider(prompt, job.params)
        except Exception as exc:
            failures.append((prompt, str(exc)))
            continue
        results.append(
            GenerationResult(
                prompt=prompt,
                generations=tuple(tuple(split_sentences(g)) for g in generations),
            )
        )
    if failures and not results:
        raise ProviderUnavailable(f"all {len(failures)} prompts failed")
    if failures:
        raise PartialBatch(successes=results, failures=failures)
    return results


# -- parsing terminology-based bilingual generations -------------------------


@dataclass
class ParsedGeneration:
    units: list[TranslationUnit]
    skipped: int = 0


_QUOTED_PAIR_RE = re.compile(r'["“]([^"“”]+)["”]\s*[:,]\s*["“]([^"“”]+)["”]')


def _try_dict_line(line: str, src_code: str, tgt_code: str) -> tuple[str, str] | None:
    start, end = line.find("{"), line.rfind("}")
    if start == -1 or end <= start:
        return None
    blob = line[start : end + 1]
    data = None
    for loader in (json.loads, ast.literal_eval):
        try:
            data = loader(blob)
            break
        except (ValueError, SyntaxError):
            continue
    if not isinstance(data, dict) or len(data) < 2:
        matches = _QUOTED_PAIR_RE.findall(blob)
        return matches[0] if matches else None
    values = {str(k).lower(): str(v) for k, v in data.items()}
    src = values.get(src_code)
    tgt = values.get(tgt_code)
    if src is not None and tgt is not None:
        return src, tgt
    ordered = [str(v) for v in data.values()]
    return ordered[0], ordered[1]


def parse_bilingual_generation(
    llm_output: str, src_lang: LangCode, tgt_lang: LangCode
) -> ParsedGeneration:
    """Tolerant parser for numbered bilingual generations.

    Accepts dictionary-style lines with quoted source/target as well as
    ``src ||| tgt`` lines with any of the separators "|||", tab, " - ", ":".
    """
    result = ParsedGeneration(units=[])
    for raw_line in llm_output.splitlines():
        line = _NUMBERING_RE.sub("", raw_line).strip()
        if not line:
            continue
        pair = _try_dict_line(line, src_lang.code, tgt_lang.code)
        if pair is None:
            for sep in ("|||", "\t", " - ", ":"):
                if sep in line:
                    src, _, tgt = line.partition(sep)
                    pair = (src, tgt)
                    break
        if pair is None:
            result.skipped += 1
            continue
        src, tgt = pair[0].strip(), pair[1].strip()
        if not src or not tgt or src == tgt:
            result.skipped += 1
            continue
        result.units.append(
            TranslationUnit(
                source=src, target=tgt, src_lang=src_lang, tgt_lang=tgt_lang,
                origin=Origin.SYNTHETIC_LM,
            )
        )
    if not result.units:
        raise NoValidRecords("no bilingual pairs found in generation output")
    return result


def score_to_exp(avg_neg_logprob_per_token: float) -> float:
    """Convert an average negative log-probability to its exponential equivalent."""
    if avg_neg_logprob_per_token < 0:
        raise NegativeInput("expected a negative log probability (>= 0)")
    return math.exp(-avg_neg_logprob_per_token)
