from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import pytest

from adaptmt.types import LangCode, TranslationUnit

REPO_ROOT = Path(__file__).resolve().parent.parent
GOLDEN_DIR = REPO_ROOT / "golden_prompts"
FIXTURES_DIR = REPO_ROOT / "fixtures"

EN = LangCode.of("en")
ES = LangCode.of("es")
AR = LangCode.of("ar")
ZH = LangCode.of("zh")
DE = LangCode.of("de")
FR = LangCode.of("fr")


@pytest.fixture(scope="session")
def wlac_fixture() -> dict:
    data = resources.files("adaptmt").joinpath("data", "wlac_fixture.json").read_text("utf-8")
    return json.loads(data)


def unit(source: str, target: str, src=EN, tgt=ES, **kw) -> TranslationUnit:
    return TranslationUnit(source=source, target=target, src_lang=src, tgt_lang=tgt, **kw)


def planted_filter_corpus() -> tuple[list[TranslationUnit], dict[str, int]]:
    """20 units: 15 clean plus exactly one violation of each filter rule.

    Each violating unit passes every rule checked before its own, so the
    per-rule drop counts are exactly one each.
    """
    units = [
        unit(f"clean sentence number {i} about health", f"oración limpia número {i} sobre salud")
        for i in range(15)
    ]
    # duplicate of the first clean pair (checked first)
    units.append(unit("clean sentence number 0 about health",
                      "oración limpia número 0 sobre salud"))
    # source == target copy
    units.append(unit("identical text both sides", "identical text both sides"))
    # over-long source (201 words)
    units.append(unit(" ".join(["palabra"] * 201), "corto"))
    # ratio violation: 9 vs 3 words (ratio 3 > 2), both within length cap
    units.append(unit("uno dos tres cuatro cinco seis siete ocho nueve", "uno dos tres"))
    # HTML tag
    units.append(unit("text with <b>markup</b> inside", "texto con marcado dentro"))
    expected = {"duplicate": 1, "source_copy": 1, "length": 1, "ratio": 1, "html": 1}
    return units, expected
