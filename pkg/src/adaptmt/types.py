"""Shared domain types: language codes, translation units, matches, terms.

All values are immutable after construction and validate their invariants
eagerly, raising typed errors from :mod:`adaptmt.errors`. The canonical
record encoding is UTF-8 JSON with snake_case field names; every type
provides ``to_dict`` / ``from_dict`` that round-trip exactly.
"""

from __future__ import annotations

import time
import uuid
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping

from .errors import EmptySide, SameLanguage, ConfigError

# Display names used verbatim inside prompts ("English: ...").
KNOWN_LANGUAGES = {
    "en": "English",
    "ar": "Arabic",
    "zh": "Chinese",
    "fr": "French",
    "es": "Spanish",
    "rw": "Kinyarwanda",
    "de": "German",
    "cs": "Czech",
    "it": "Italian",
    "pt": "Portuguese",
}


@dataclass(frozen=True)
class LangCode:
    code: str
    display_name: str

    def __post_init__(self):
        if not self.code or self.code != self.code.lower():
            raise ConfigError(f"language code must be non-empty lowercase, got {self.code!r}")
        if not self.display_name:
            raise ConfigError(f"display name required for language {self.code!r}")

    @classmethod
    def of(cls, code: str, display_name: str | None = None) -> "LangCode":
        """Resolve a code against the built-in registry, or use the given name."""
        code = code.strip().lower()
        name = display_name or KNOWN_LANGUAGES.get(code)
        if name is None:
            raise ConfigError(f"unknown language {code!r}; pass display_name explicitly")
        return cls(code, name)

    def to_dict(self) -> dict[str, Any]:
        return {"code": self.code, "display_name": self.display_name}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "LangCode":
        return cls(code=d["code"], display_name=d["display_name"])


class Origin(str, Enum):
    AUTHENTIC = "authentic"
    SYNTHETIC_LM = "synthetic_lm"
    BACK_TRANSLATED = "back_translated"
    APPROVED_EDIT = "approved_edit"
    MACHINE = "machine"


def now_ms() -> int:
    """UTC epoch milliseconds; the only clock used for unit timestamps."""
    return int(time.time() * 1000)


def new_id() -> str:
    return uuid.uuid4().hex


@dataclass(frozen=True)
class TranslationUnit:
    source: str
    target: str
    src_lang: LangCode
    tgt_lang: LangCode
    origin: Origin = Origin.AUTHENTIC
    id: str = field(default_factory=new_id)
    created_at: int = field(default_factory=now_ms)

    def __post_init__(self):
        if not self.source.strip() or not self.target.strip():
            raise EmptySide("source and target must be non-empty")
        if self.src_lang.code == self.tgt_lang.code:
            raise SameLanguage(f"source and target language are both {self.src_lang.code!r}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "source": self.source,
            "target": self.target,
            "src_lang": self.src_lang.to_dict(),
            "tgt_lang": self.tgt_lang.to_dict(),
            "origin": self.origin.value,
            "created_at": self.created_at,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "TranslationUnit":
        return cls(
            id=d["id"],
            source=d["source"],
            target=d["target"],
            src_lang=LangCode.from_dict(d["src_lang"]),
            tgt_lang=LangCode.from_dict(d["tgt_lang"]),
            origin=Origin(d["origin"]),
            created_at=int(d["created_at"]),
        )


def validate_unit(
    source: str,
    target: str,
    src_lang: LangCode,
    tgt_lang: LangCode,
    origin: Origin = Origin.AUTHENTIC,
) -> TranslationUnit:
    """Validate a raw record into a TranslationUnit (EmptySide / SameLanguage)."""
    return TranslationUnit(
        source=source, target=target, src_lang=src_lang, tgt_lang=tgt_lang, origin=origin
    )


@dataclass(frozen=True)
class FuzzyMatch:
    unit: TranslationUnit
    similarity: float

    def __post_init__(self):
        # float32 rounding can push |cosine| a hair past 1; clamp, don't reject.
        if not -1.0 - 1e-6 <= self.similarity <= 1.0 + 1e-6:
            raise ConfigError(f"cosine similarity out of range: {self.similarity}")
        object.__setattr__(self, "similarity", min(1.0, max(-1.0, self.similarity)))

    def to_dict(self) -> dict[str, Any]:
        return {"unit": self.unit.to_dict(), "similarity": self.similarity}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "FuzzyMatch":
        return cls(unit=TranslationUnit.from_dict(d["unit"]), similarity=float(d["similarity"]))


def ngram_len(term: str) -> int:
    """Whitespace-token count; 1 for unspaced scripts."""
    return max(1, len(term.split()))


@dataclass(frozen=True)
class TermPair:
    source_term: str
    target_term: str
    frequency: int = 1
    src_ngram_len: int = 0  # 0 means "derive from source_term"

    def __post_init__(self):
        if not self.source_term.strip() or not self.target_term.strip():
            raise EmptySide("term sides must be non-empty")
        if self.frequency < 1:
            raise ConfigError(f"term frequency must be >= 1, got {self.frequency}")
        if self.src_ngram_len == 0:
            object.__setattr__(self, "src_ngram_len", ngram_len(self.source_term))
        elif self.src_ngram_len < 1:
            raise ConfigError(f"src_ngram_len must be >= 1, got {self.src_ngram_len}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "source_term": self.source_term,
            "target_term": self.target_term,
            "frequency": self.frequency,
            "src_ngram_len": self.src_ngram_len,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "TermPair":
        return cls(
            source_term=d["source_term"],
            target_term=d["target_term"],
            frequency=int(d.get("frequency", 1)),
            src_ngram_len=int(d.get("src_ngram_len", 0)),
        )


@dataclass(frozen=True)
class SamplingParams:
    top_p: float = 1.0
    temperature: float = 0.3
    top_k: int = 0
    num_hypotheses: int = 1
    max_new_tokens: int = 256
    stop_sequences: tuple[str, ...] = ()

    def __post_init__(self):
        if not 0.0 < self.top_p <= 1.0:
            raise ConfigError(f"top_p must be in (0, 1], got {self.top_p}")
        if self.temperature < 0.0:
            raise ConfigError(f"temperature must be >= 0, got {self.temperature}")
        if self.top_k < 0:
            raise ConfigError(f"top_k must be >= 0, got {self.top_k}")
        if self.num_hypotheses < 1:
            raise ConfigError(f"num_hypotheses must be >= 1, got {self.num_hypotheses}")
        if self.max_new_tokens < 1:
            raise ConfigError(f"max_new_tokens must be >= 1, got {self.max_new_tokens}")
        if isinstance(self.stop_sequences, list):
            object.__setattr__(self, "stop_sequences", tuple(self.stop_sequences))

    def to_dict(self) -> dict[str, Any]:
        return {
            "top_p": self.top_p,
            "temperature": self.temperature,
            "top_k": self.top_k,
            "num_hypotheses": self.num_hypotheses,
            "max_new_tokens": self.max_new_tokens,
            "stop_sequences": list(self.stop_sequences),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "SamplingParams":
        return cls(
            top_p=float(d["top_p"]),
            temperature=float(d["temperature"]),
            top_k=int(d["top_k"]),
            num_hypotheses=int(d["num_hypotheses"]),
            max_new_tokens=int(d["max_new_tokens"]),
            stop_sequences=tuple(d["stop_sequences"]),
        )
