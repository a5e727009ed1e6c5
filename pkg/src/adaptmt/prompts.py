"""Prompt construction for every supported template.

All renderers are pure functions producing exact strings (UTF-8, LF).
Few-shot examples are laid out with the *lowest*-similarity match first so
the best match sits adjacent to the final query block. Language names
appear as capitalized display names ("English: ...").
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Sequence

from .errors import ConfigError, EmptyMatches, EmptyTerms, MissingSlot
from .types import FuzzyMatch, LangCode, TermPair, TranslationUnit

DEFAULT_PREFIX_JOINER = "•"  # bullet


class Template(str, Enum):
    ZERO_SHOT = "zero_shot"
    FEW_SHOT = "few_shot"
    FEW_SHOT_ONE_MT = "few_shot_one_mt"
    FEW_SHOT_ALL_MT = "few_shot_all_mt"
    TERM_EXTRACT = "term_extract"
    ZERO_SHOT_TERMS = "zero_shot_terms"
    FEW_SHOT_FUZZY_TERMS = "few_shot_fuzzy_terms"
    FEW_SHOT_GLOSSARY_TERMS = "few_shot_glossary_terms"
    TERM_APE = "term_ape"
    SYNTH_TERM_GEN = "synth_term_gen"
    PREFIX_AUGMENT = "prefix_augment"


# Templates whose completion is a single translation line.
_NEWLINE_STOP_TEMPLATES = {
    Template.ZERO_SHOT,
    Template.FEW_SHOT,
    Template.FEW_SHOT_ONE_MT,
    Template.FEW_SHOT_ALL_MT,
    Template.ZERO_SHOT_TERMS,
    Template.FEW_SHOT_FUZZY_TERMS,
    Template.FEW_SHOT_GLOSSARY_TERMS,
}


@dataclass(frozen=True)
class PromptSpec:
    template: Template
    bindings: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class RenderedPrompt:
    text: str
    expected_stop: str | None = None
    slots_used: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.text:
            raise ConfigError("rendered prompt must be non-empty")


def _require(bindings: dict[str, Any], slot: str) -> Any:
    if slot not in bindings or bindings[slot] is None:
        raise MissingSlot(f"template requires slot {slot!r}")
    return bindings[slot]


def _check_sorted_desc(matches: Sequence[FuzzyMatch]) -> None:
    for a, b in zip(matches, matches[1:]):
        if a.similarity < b.similarity:
            raise ConfigError("fuzzy matches must be sorted by similarity descending")


def _example_lines(matches: Sequence[FuzzyMatch], src: LangCode, tgt: LangCode,
                   mt_per_match: Sequence[str] | None = None) -> list[str]:
    """Example blocks, lowest-similarity match first (reading toward the query)."""
    lines: list[str] = []
    order = list(reversed(range(len(matches))))
    for i in order:
        match = matches[i]
        lines.append(f"{src.display_name}: {match.unit.source}")
        if mt_per_match is not None:
            lines.append(f"MT: {mt_per_match[i]}")
        lines.append(f"{tgt.display_name}: {match.unit.target}")
    return lines


def render_terms_block(terms: Sequence[TermPair]) -> str:
    """Single line ``Terms: s1 = t1 - s2 = t2 - ...``."""
    if not terms:
        raise EmptyTerms("terms block needs at least one term pair")
    return "Terms: " + " - ".join(f"{t.source_term} = {t.target_term}" for t in terms)


def render_zero_shot(src: LangCode, tgt: LangCode, segment: str,
                     terms: Sequence[TermPair] | None = None) -> RenderedPrompt:
    lines = []
    slots = {"source_segment": segment}
    if terms is not None:
        lines.append(render_terms_block(terms))
        slots["terms"] = str(len(terms))
    lines.append(f"{src.display_name}: {segment}")
    lines.append(f"{tgt.display_name}:")
    return RenderedPrompt(text="\n".join(lines), expected_stop="\n", slots_used=slots)


def render_few_shot(
    src: LangCode,
    tgt: LangCode,
    segment: str,
    matches: Sequence[FuzzyMatch],
    mt_segment: str | None = None,
    mt_per_match: Sequence[str] | None = None,
    terms_per_match: Sequence[Sequence[TermPair]] | None = None,
    final_terms: Sequence[TermPair] | None = None,
) -> RenderedPrompt:
    """Few-shot translation prompt, optionally MT-augmented or term-annotated.

    ``matches`` must be sorted by similarity descending; the rendtext reverses
    them so the best match is adjacent to the query block.
    """
    if not matches:
        raise EmptyMatches("few-shot prompt needs at least one fuzzy match")
    _check_sorted_desc(matches)
    if mt_per_match is not None and len(mt_per_match) != len(matches):
        raise MissingSlot("one MT string required per fuzzy match")
    if terms_per_match is not None and len(terms_per_match) != len(matches):
        raise MissingSlot("one terms list required per fuzzy match")

    lines: list[str] = []
    order = list(reversed(range(len(matches))))
    for i in order:
        match = matches[i]
        if terms_per_match is not None and terms_per_match[i]:
            lines.append(render_terms_block(terms_per_match[i]))
        lines.append(f"{src.display_name}: {match.unit.source}")
        if mt_per_match is not None:
            lines.append(f"MT: {mt_per_match[i]}")
        lines.append(f"{tgt.display_name}: {match.unit.target}")
    if final_terms:
        lines.append(render_terms_block(final_terms))
    lines.append(f"{src.display_name}: {segment}")
    if mt_segment is not None:
        lines.append(f"MT: {mt_segment}")
    lines.append(f"{tgt.display_name}:")
    slots = {
        "source_segment": segment,
        "matches": str(len(matches)),
    }
    if mt_segment is not None:
        slots["mt_segment"] = mt_segment
    return RenderedPrompt(text="\n".join(lines), expected_stop="\n", slots_used=slots)


def render_term_extract(pair: TranslationUnit, number: int, separator: str) -> RenderedPrompt:
    """Bilingual terminology-extraction prompt ending with the ``1.`` cue."""
    if number < 1:
        raise MissingSlot("number of terms must be >= 1")
    if not separator:
        raise MissingSlot("separator must be non-empty")
    src, tgt = pair.src_lang, pair.tgt_lang
    text = (
        f"{src.display_name}: {pair.source}\n"
        f"{tgt.display_name}: {pair.target}\n"
        "\n"
        f"Extract {number} terms from the above sentence pair. "
        f"Type each {src.display_name} term and its {tgt.display_name} equivalent "
        f"in one line, separated by '{separator}'.\n"
        "\n"
        "1."
    )
    slots = {"number": str(number), "separator": separator}
    return RenderedPrompt(text=text, expected_stop=None, slots_used=slots)


def render_term_ape(src: LangCode, tgt: LangCode, src_seg: str, tgt_seg: str,
                    terms: Sequence[TermPair]) -> RenderedPrompt:
    """Post-editing prompt that asks for the given terms and nothing else changed."""
    if not terms:
        raise EmptyTerms("post-editing prompt needs at least one required term")
    if not tgt_seg.strip():
        raise MissingSlot("existing translation must be non-empty")
    directives = ", and ".join(
        f'the "{t.target_term}" to translate the {src.display_name} term "{t.source_term}"'
        for t in terms
    )
    text = (
        f"In the following {tgt.display_name} translation, use {directives}.\n"
        "Leave everything else the same.\n"
        "\n"
        f"{src.display_name}: {src_seg}\n"
        f"{tgt.display_name}: {tgt_seg}"
    )
    slots = {"terms": str(len(terms)), "src_segment": src_seg}
    return RenderedPrompt(text=text, expected_stop=None, slots_used=slots)


def render_synth_gen(term: str, n: int, src: LangCode, tgt: LangCode) -> RenderedPrompt:
    """Terminology-based bilingual generation request (numbered dict-format output)."""
    if n < 1:
        raise MissingSlot("sentence count must be >= 1")
    text = (
        f'Please use the "{term}" to generate just {n} numbered sentences in '
        f"{src.display_name}-{tgt.display_name} in one Python dictionary format."
    )
    return RenderedPrompt(text=text, expected_stop=None, slots_used={"term": term, "n": str(n)})


def render_prefix_augment(src_seg: str, fuzzy: TranslationUnit, src_code: str,
                          tgt_code: str, joiner: str = DEFAULT_PREFIX_JOINER) -> tuple[str, str]:
    """Source augmentation and target prefix for prefix-forcing MT decoders.

    Returns ``(augmented_source, target_prefix)``; the decoder is expected to
    continue after the prefix, so stripping the prefix from a completed
    output recovers the new translation.
    """
    augmented_source = f"{fuzzy.source} {src_code} {joiner} {src_seg}"
    target_prefix = f"{fuzzy.target} {tgt_code} {joiner}"
    return augmented_source, target_prefix


def render(spec: PromptSpec) -> RenderedPrompt:
    """Dispatch a PromptSpec to its renderer.

    For ``prefix_augment`` the two output strings are joined by a newline
    (augmented source first); use :func:`render_prefix_augment` for the pair.
    """
    b = spec.bindings
    t = spec.template
    if t is Template.ZERO_SHOT:
        return render_zero_shot(_require(b, "src_lang"), _require(b, "tgt_lang"),
                                _require(b, "segment"))
    if t is Template.ZERO_SHOT_TERMS:
        return render_zero_shot(_require(b, "src_lang"), _require(b, "tgt_lang"),
                                _require(b, "segment"), terms=_require(b, "terms"))
    if t is Template.FEW_SHOT:
        return render_few_shot(_require(b, "src_lang"), _require(b, "tgt_lang"),
                               _require(b, "segment"), _require(b, "matches"))
    if t is Template.FEW_SHOT_ONE_MT:
        return render_few_shot(_require(b, "src_lang"), _require(b, "tgt_lang"),
                               _require(b, "segment"), _require(b, "matches"),
                               mt_segment=_require(b, "mt_segment"))
    if t is Template.FEW_SHOT_ALL_MT:
        return render_few_shot(_require(b, "src_lang"), _require(b, "tgt_lang"),
                               _require(b, "segment"), _require(b, "matches"),
                               mt_segment=_require(b, "mt_segment"),
                               mt_per_match=_require(b, "mt_per_match"))
    if t is Template.FEW_SHOT_FUZZY_TERMS or t is Template.FEW_SHOT_GLOSSARY_TERMS:
        return render_few_shot(_require(b, "src_lang"), _require(b, "tgt_lang"),
                               _require(b, "segment"), _require(b, "matches"),
                               terms_per_match=_require(b, "terms_per_match"),
                               final_terms=_require(b, "final_terms"))
    if t is Template.TERM_EXTRACT:
        return render_term_extract(_require(b, "pair"), _require(b, "number"),
                                   _require(b, "separator"))
    if t is Template.TERM_APE:
        return render_term_ape(_require(b, "src_lang"), _require(b, "tgt_lang"),
                               _require(b, "src_segment"), _require(b, "tgt_segment"),
                               _require(b, "terms"))
    if t is Template.SYNTH_TERM_GEN:
        return render_synth_gen(_require(b, "term"), _require(b, "n"),
                                _require(b, "src_lang"), _require(b, "tgt_lang"))
    if t is Template.PREFIX_AUGMENT:
        augmented, prefix = render_prefix_augment(
            _require(b, "segment"), _require(b, "fuzzy"), _require(b, "src_code"),
            _require(b, "tgt_code"), b.get("joiner", DEFAULT_PREFIX_JOINER))
        return RenderedPrompt(
            text=augmented + "\n" + prefix,
            expected_stop=None,
            slots_used={"augmented_source": augmented, "target_prefix": prefix},
        )
    raise MissingSlot(f"unknown template {t!r}")
