"""Word-level autocompletion by repeated translation sampling.

Given a source, optional partial target context, and the characters the
user has typed, sample alternative translations and return the first word
that extends the typed sequence. When a left context applies, hypotheses
are additionally gathered with prefix-constrained decoding and scanned
from the continuation after the prefix. The right context is accepted for
API compatibility but never consulted.
"""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

from .errors import ConfigError, EmptyInput, SamplerFailure

# \w runs joined by inner hyphens/apostrophes: hyphenated compounds stay whole.
_WORD_RE = re.compile(r"\w+(?:[-'’]\w+)*", re.UNICODE)


@dataclass(frozen=True)
class WlacQuery:
    source: str
    typed: str
    left_context: str = ""
    right_context: str = ""  # accepted, unused

    def __post_init__(self):
        if not self.typed:
            raise ConfigError("typed sequence must be non-empty")


@dataclass(frozen=True)
class WlacConfig:
    num_hypotheses: int = 10
    top_k: int = 10
    max_runs: int = 5
    temp_lo: float = 1.0
    temp_hi: float = 1.3
    seed: int | None = None

    def __post_init__(self):
        if self.max_runs < 1:
            raise ConfigError("max_runs must be >= 1")
        if self.temp_lo > self.temp_hi:
            raise ConfigError("temp_lo must be <= temp_hi")
        if self.num_hypotheses < 1 or self.top_k < 1:
            raise ConfigError("num_hypotheses and top_k must be >= 1")


@dataclass(frozen=True)
class WlacResult:
    word: str | None = None
    run_found: int | None = None
    candidates_scanned: int = 0
    used_prefix: bool = False

    def __post_init__(self):
        if (self.word is None) != (self.run_found is None):
            raise ConfigError("word and run_found must be present together")

    @property
    def found(self) -> bool:
        return self.word is not None


class Sampler(Protocol):
    """Translation sampler contract.

    Returns up to ``n`` alternative hypotheses for the source; when
    ``target_prefix`` is given, decoding continues after the prefix
    (returned hypotheses may or may not repeat the prefix text).
    Implementations must be safe for concurrent calls.
    """

    def sample(self, source: str, target_prefix: str | None, n: int, top_k: int,
               temperature: float) -> Sequence[str | Sequence[str]]: ...


Tokenizer = Callable[[str], list[str]]


def word_tokenize(text: str, lang: str | None = None) -> list[str]:
    """Default word segmentation; language-specific tokenizers are pluggable."""
    return _WORD_RE.findall(text)


def run_temperatures(cfg: WlacConfig) -> list[float]:
    """Per-run sampling temperatures: run 1 pinned to temp_lo, later runs
    uniform-random in [temp_lo, temp_hi] from the seed. The sequence for
    max_runs=n is a prefix of the sequence for max_runs=n+1."""
    rng = random.Random(cfg.seed)
    temps = []
    for run in range(1, cfg.max_runs + 1):
        temps.append(cfg.temp_lo if run == 1 else rng.uniform(cfg.temp_lo, cfg.temp_hi))
    return temps


def _prefix_applies(left_context: str) -> bool:
    stripped = left_context.strip()
    if not stripped:
        return False
    first = stripped[0]
    # Uppercase trigger for cased scripts; uncased scripts always qualify.
    return first.isupper() or first.upper() == first.lower()


def _detokenize(hypothesis: str | Sequence[str]) -> str:
    if isinstance(hypothesis, str):
        return hypothesis
    return " ".join(hypothesis)


def autocomplete(query: WlacQuery, sampler: Sampler, cfg: WlacConfig = WlacConfig(),
                 tokenizer: Tokenizer | None = None) -> WlacResult:
    tokenize = tokenizer or word_tokenize
    use_prefix = _prefix_applies(query.left_context)
    scanned = 0

    for run, temperature in enumerate(run_temperatures(cfg), start=1):
        candidates: list[tuple[str, bool]] = []  # (word, from_prefix_constrained)
        try:
            plain = sampler.sample(query.source, None, cfg.num_hypotheses, cfg.top_k,
                                   temperature)
            constrained: Sequence[str | Sequence[str]] = []
            if use_prefix:
                constrained = sampler.sample(query.source, query.left_context,
                                             cfg.num_hypotheses, cfg.top_k, temperature)
        except Exception as exc:
            raise SamplerFailure(f"sampler failed on run {run}: {exc}", run=run) from exc

        for hyp in plain:
            for word in tokenize(_detokenize(hyp)):
                candidates.append((word, False))
        for hyp in constrained:
            text = _detokenize(hyp)
            if text.startswith(query.left_context):
                text = text[len(query.left_context):]
            for word in tokenize(text):
                candidates.append((word, True))

        # Exact-case pass over all candidates of this run, then case-insensitive.
        typed_fold = query.typed.casefold()
        for word, from_prefix in candidates:
            scanned += 1
            if word.startswith(query.typed):
                return WlacResult(word=word, run_found=run, candidates_scanned=scanned,
                                  used_prefix=from_prefix)
        for word, from_prefix in candidates:
            scanned += 1
            if word.casefold().startswith(typed_fold):
                return WlacResult(word=word, run_found=run, candidates_scanned=scanned,
                                  used_prefix=from_prefix)

    return WlacResult(word=None, run_found=None, candidates_scanned=scanned,
                      used_prefix=False)


def wlac_accuracy(results: Sequence[tuple[WlacResult, str]]) -> float:
    """Share of exact word matches: correct predictions / all queries."""
    if not results:
        raise EmptyInput("accuracy needs at least one result")
    hits = sum(1 for result, gold in results if gold is not None and result.word == gold)
    return hits / len(results)


# -- deterministic mock sampler ---------------------------------------------

FIXTURE_KEY_SEP = ""


def temperature_bucket(temperature: float) -> str:
    """Fixture key bucket: temperature floored to one decimal."""
    return f"{math.floor(temperature * 10 + 1e-9) / 10:.1f}"


def fixture_key(source: str, prefix: str | None, temperature: float) -> str:
    return FIXTURE_KEY_SEP.join([source, prefix or "", temperature_bucket(temperature)])


@dataclass
class MockSampler:
    """Pure fixture-backed sampler: hypotheses keyed by (source, prefix, bucket).

    Hypothesis ``i`` of a key is available only when ``top_k > i``; of the
    available ones the first ``n`` are returned, so widening either
    parameter grows the hypothesis list monotonically.
    """

    entries: dict[str, list[str]]
    calls: list[tuple[str, str | None, int, int, str]] = field(default_factory=list)

    def sample(self, source: str, target_prefix: str | None, n: int, top_k: int,
               temperature: float) -> list[str]:
        self.calls.append((source, target_prefix, n, top_k, temperature_bucket(temperature)))
        hyps = self.entries.get(fixture_key(source, target_prefix, temperature), [])
        return hyps[:top_k][:n]

    @classmethod
    def from_fixture(cls, fixture: dict) -> "MockSampler":
        return cls(entries=dict(fixture["entries"]))
