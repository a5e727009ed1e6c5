from __future__ import annotations

import math

import pytest

from adaptmt.embedding import HashEmbedder, cosine
from adaptmt.errors import (
    ConfigError,
    EmptyDataset,
    NegativeInput,
    NoValidRecords,
    PartialBatch,
    ProviderUnavailable,
)
from adaptmt.pipeline import (
    GenerationJob,
    MixPlan,
    generate_synthetic,
    language_filter,
    mixed_sample,
    parse_bilingual_generation,
    rule_filter,
    score_to_exp,
    semantic_filter,
    split_sentences,
    word_count,
)
from adaptmt.types import Origin

from conftest import DE, EN, ES, planted_filter_corpus, unit


class TestRuleFilter:
    def test_planted_corpus_counts(self):
        units, expected = planted_filter_corpus()
        stream, report = rule_filter(units)
        kept = list(stream)
        assert len(kept) == 15
        assert report.dropped_by_rule == expected
        assert report.input == report.kept + report.dropped == 20

    def test_idempotent_on_refiltered_stream(self):
        units, _ = planted_filter_corpus()
        stream, _ = rule_filter(units)
        kept = list(stream)
        stream2, report2 = rule_filter(kept)
        assert list(stream2) == kept
        assert report2.dropped == 0

    def test_201_word_source_dropped(self):
        long_unit = unit(" ".join(["w"] * 201), "corto")
        stream, report = rule_filter([long_unit])
        assert list(stream) == []
        assert report.dropped_by_rule == {"length": 1}

    def test_exactly_200_words_kept(self):
        # ratio guard: keep both sides at 200 words
        u = unit(" ".join(["w"] * 200), " ".join(["v"] * 200))
        stream, report = rule_filter([u])
        assert len(list(stream)) == 1 and report.kept == 1

    def test_source_copy_dropped(self):
        stream, report = rule_filter([unit("x", "x")])
        assert list(stream) == []
        assert report.dropped_by_rule == {"source_copy": 1}

    def test_word_count_unspaced_heuristic(self):
        assert word_count("hello there") == 2
        assert word_count("病毒传播得很快") == math.ceil(7 / 2)


class TestSemanticFilter:
    def test_identical_text_kept(self):
        u = unit("same words here", "same words here alt")
        stream, report = semantic_filter([u], HashEmbedder(), threshold=0.45)
        assert len(list(stream)) == 1 and report.kept == 1

    def test_impossible_threshold_drops_all(self):
        u = unit("abc", "xyz")
        stream, report = semantic_filter([u], HashEmbedder(), threshold=1.1)
        assert list(stream) == []
        assert report.dropped_by_rule == {"semantic": 1}

    def test_dissimilar_pair_dropped_at_paper_threshold(self):
        embedder = HashEmbedder()
        source, target = "alpha beta gamma delta", "zzz qqq www kkk"
        sv, tv = embedder.embed_batch([source, target])
        assert cosine(sv, tv) < 0.45  # fixture engineered below the threshold
        stream, report = semantic_filter([unit(source, target)], embedder, 0.45)
        assert list(stream) == []
        assert report.dropped_by_rule == {"semantic": 1}


class TestLanguageFilter:
    @staticmethod
    def lid(text: str) -> tuple[str, float]:
        table = {
            "english text": ("en", 0.99),
            "texto español": ("es", 0.98),
            "texte français": ("fr", 0.95),
            "low confidence": ("en", 0.85),
        }
        return table.get(text, ("en", 0.99))

    def test_matching_languages_kept(self):
        u = unit("english text", "texto español")
        stream, report = language_filter([u], self.lid, threshold=0.9)
        assert len(list(stream)) == 1 and report.kept == 1

    def test_wrong_detected_language_dropped(self):
        u = unit("texte français", "texto español")
        stream, report = language_filter([u], self.lid, threshold=0.9)
        assert list(stream) == []
        assert report.dropped_by_rule == {"language": 1}

    def test_low_confidence_dropped(self):
        u = unit("low confidence", "texto español")
        stream, _ = language_filter([u], self.lid, threshold=0.9)
        assert list(stream) == []


class TestMixedSample:
    IN_DOMAIN = [unit(f"dominio {i}", f"in-domain {i}", src=ES, tgt=EN) for i in range(10)]
    GENERIC = [unit(f"genérico {i}", f"generic {i}", src=ES, tgt=EN) for i in range(200)]

    def test_expected_fraction(self):
        draws = list(mixed_sample(self.IN_DOMAIN, self.GENERIC, MixPlan(), seed=1,
                                  n_draws=20_000))
        in_domain = sum(1 for u in draws if u.source.startswith("dominio"))
        assert abs(in_domain / len(draws) - 0.9) < 0.01

    def test_oversampling_covers_small_pool(self):
        draws = list(mixed_sample(self.IN_DOMAIN, self.GENERIC, MixPlan(), seed=2,
                                  n_draws=1000))
        seen = {u.source for u in draws if u.source.startswith("dominio")}
        assert seen == {u.source for u in self.IN_DOMAIN}

    def test_deterministic_under_seed(self):
        a = [u.id for u in mixed_sample(self.IN_DOMAIN, self.GENERIC, seed=3, n_draws=500)]
        b = [u.id for u in mixed_sample(self.IN_DOMAIN, self.GENERIC, seed=3, n_draws=500)]
        assert a == b

    def test_degenerate_weights_rejected(self):
        with pytest.raises(ConfigError):
            MixPlan(in_domain_weight=1.0, generic_weight=0.0)

    def test_empty_dataset(self):
        with pytest.raises(EmptyDataset):
            list(mixed_sample([], self.GENERIC, n_draws=1))


class TestGenerateSynthetic:
    def test_two_prompts_five_hypotheses(self):
        provider = lambda prompt, params: [f"{prompt} gen {i}." for i in range(5)]
        job = GenerationJob(prompts=["p1", "p2"], provider=provider)
        results = generate_synthetic(job)
        assert len(results) == 2
        assert all(len(r.generations) == 5 for r in results)

    def test_partial_batch_keeps_successes(self):
        def provider(prompt, params):
            if prompt == "bad":
                raise RuntimeError("boom")
            return ["ok."]

        job = GenerationJob(prompts=["a", "bad", "c"], provider=provider)
        with pytest.raises(PartialBatch) as exc_info:
            generate_synthetic(job)
        assert len(exc_info.value.successes) == 2
        assert len(exc_info.value.failures) == 1

    def test_all_failed(self):
        def provider(prompt, params):
            raise RuntimeError("down")

        with pytest.raises(ProviderUnavailable):
            generate_synthetic(GenerationJob(prompts=["a"], provider=provider))

    def test_sentence_split(self):
        assert split_sentences("A. B? C!") == ["A.", "B?", "C!"]
        assert split_sentences("一句话。第二句！") == ["一句话。", "第二句！"]
        assert split_sentences("no terminal punctuation") == ["no terminal punctuation"]

    def test_default_params_match_generation_setup(self):
        job = GenerationJob(prompts=["p"], provider=lambda p, s: ["x."])
        assert job.params.top_k == 50
        assert job.params.top_p == 0.95
        assert job.params.max_new_tokens == 300
        assert job.params.num_hypotheses == 5


class TestParseBilingualGeneration:
    def test_dict_style_block(self):
        output = "\n".join([
            '1. {"de": "Satz eins", "en": "Sentence one"}',
            '2. {"de": "Satz zwei", "en": "Sentence two"}',
            '3. {"de": "Satz drei", "en": "Sentence three"}',
        ])
        parsed = parse_bilingual_generation(output, DE, EN)
        assert len(parsed.units) == 3
        assert parsed.units[0].source == "Satz eins"
        assert parsed.units[0].target == "Sentence one"
        assert parsed.units[0].origin is Origin.SYNTHETIC_LM

    def test_python_dict_single_quotes(self):
        parsed = parse_bilingual_generation("1. {'de': 'Eins', 'en': 'One'}", DE, EN)
        assert parsed.units[0].target == "One"

    def test_separator_lines(self):
        output = "1. Eins ||| One\n2. Zwei\tTwo\n3. Drei - Three\n4. Vier: Four"
        parsed = parse_bilingual_generation(output, DE, EN)
        assert [(u.source, u.target) for u in parsed.units] == [
            ("Eins", "One"), ("Zwei", "Two"), ("Drei", "Three"), ("Vier", "Four"),
        ]

    def test_prose_rejected(self):
        with pytest.raises(NoValidRecords):
            parse_bilingual_generation("just a paragraph of prose with no structure", DE, EN)

    def test_mixed_lines_counted(self):
        output = "1. Eins ||| One\nnoise line\n2. Zwei ||| Two"
        parsed = parse_bilingual_generation(output, DE, EN)
        assert len(parsed.units) == 2
        assert parsed.skipped == 1


class TestScoreToExp:
    def test_perfect_probability(self):
        assert score_to_exp(0.0) == 1.0

    def test_inverse_check_chatgpt_de_en(self):
        assert score_to_exp(-math.log(0.59)) == pytest.approx(0.59, abs=1e-4)

    def test_inverse_check_nllb_de_en(self):
        assert score_to_exp(-math.log(0.68)) == pytest.approx(0.68, abs=1e-4)

    def test_negative_rejected(self):
        with pytest.raises(NegativeInput):
            score_to_exp(-0.1)
