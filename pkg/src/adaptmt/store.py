"""Per-project translation-memory storage with append-only approved-edit feedback.

Persistence formats:
  - ``*.units.jsonl``: one canonical JSON unit per line (see types.TranslationUnit)
  - ``*.tsv``: ``source<TAB>target``, UTF-8, no header
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable

from .errors import AdaptMtError, EmptySide, LanguageMismatch, NoValidRecords
from .types import LangCode, Origin, TranslationUnit, new_id


class CorpusFormat(str, Enum):
    JSONL_UNITS = "jsonl_units"
    TSV_BITEXT = "tsv_bitext"


@dataclass(frozen=True)
class CorpusFile:
    path: str
    format: CorpusFormat
    count: int = 0

    def __post_init__(self):
        if self.count < 0:
            raise AdaptMtError("corpus count must be >= 0")


@dataclass
class LoadResult:
    units: list[TranslationUnit]
    skipped: int = 0
    problems: list[str] = field(default_factory=list)


class Project:
    """Ordered, append-only collection of units sharing one language pair.

    Reads are lock-free; writes serialize on a per-project lock
    (single-writer contract).
    """

    def __init__(self, name: str, src_lang: LangCode, tgt_lang: LangCode,
                 project_id: str | None = None):
        self.id = project_id or new_id()
        self.name = name
        self.src_lang = src_lang
        self.tgt_lang = tgt_lang
        self.units: list[TranslationUnit] = []
        self.glossary_ref: str | None = None
        self._pairs: set[tuple[str, str]] = set()
        self._write_lock = threading.Lock()

    def __len__(self) -> int:
        return len(self.units)

    def add_units(self, units: Iterable[TranslationUnit]) -> int:
        """Append validated units; exact (source, target) duplicates are skipped."""
        added = 0
        with self._write_lock:
            for unit in units:
                if (unit.src_lang.code, unit.tgt_lang.code) != (
                    self.src_lang.code,
                    self.tgt_lang.code,
                ):
                    raise LanguageMismatch(
                        f"unit is {unit.src_lang.code}->{unit.tgt_lang.code}, "
                        f"project is {self.src_lang.code}->{self.tgt_lang.code}"
                    )
                key = (unit.source, unit.target)
                if key in self._pairs:
                    continue
                self._pairs.add(key)
                self.units.append(unit)
                added += 1
        return added

    def approve_edit(self, source: str, edited_target: str) -> TranslationUnit:
        """Record a translator-approved pair; returns the stored unit.

        Approving an already-stored pair returns the existing unit and
        leaves the TM unchanged.
        """
        if not source.strip() or not edited_target.strip():
            raise EmptySide("approved edits need non-empty source and target")
        with self._write_lock:
            key = (source, edited_target)
            if key in self._pairs:
                for unit in self.units:
                    if (unit.source, unit.target) == key:
                        return unit
            unit = TranslationUnit(
                source=source,
                target=edited_target,
                src_lang=self.src_lang,
                tgt_lang=self.tgt_lang,
                origin=Origin.APPROVED_EDIT,
            )
            self._pairs.add(key)
            self.units.append(unit)
            return unit


def load_corpus(file: CorpusFile, src_lang: LangCode, tgt_lang: LangCode,
                origin: Origin = Origin.AUTHENTIC) -> LoadResult:
    """Read a corpus file into validated units; malformed lines are counted, not fatal."""
    path = Path(file.path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise AdaptMtError(f"cannot read corpus {path}: {exc}") from exc
    result = LoadResult(units=[])
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            if file.format is CorpusFormat.JSONL_UNITS:
                unit = TranslationUnit.from_dict(json.loads(line))
            else:
                src, sep, tgt = line.partition("\t")
                if not sep:
                    raise ValueError("no tab separator")
                unit = TranslationUnit(
                    source=src.strip(), target=tgt.strip(),
                    src_lang=src_lang, tgt_lang=tgt_lang, origin=origin,
                )
        except (ValueError, KeyError, AdaptMtError) as exc:
            result.skipped += 1
            if len(result.problems) < 20:
                result.problems.append(f"line {lineno}: {exc}")
            continue
        result.units.append(unit)
    if not result.units:
        raise NoValidRecords(f"no valid records in {path}")
    return result


def save_units_jsonl(units: Iterable[TranslationUnit], path: str | Path) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for unit in units:
            fh.write(json.dumps(unit.to_dict(), ensure_ascii=False) + "\n")
            count += 1
    return count
