from __future__ import annotations

import json

import pytest

from adaptmt.cli import main

from conftest import FIXTURES_DIR, planted_filter_corpus
from adaptmt.store import save_units_jsonl


@pytest.fixture
def tm_tsv(tmp_path):
    path = tmp_path / "tm.tsv"
    rows = [
        ("The patient has a mild fever.", "El paciente tiene fiebre leve."),
        ("The patient reports severe fever and cough.",
         "El paciente refiere fiebre intensa y tos."),
        ("Wash your hands regularly.", "Lávese las manos con regularidad."),
    ]
    path.write_text("\n".join(f"{s}\t{t}" for s, t in rows) + "\n", encoding="utf-8")
    return path


class TestFilter:
    def test_report_conservation(self, tmp_path, capsys):
        units, expected = planted_filter_corpus()
        infile = tmp_path / "corpus.units.jsonl"
        save_units_jsonl(units, infile)
        report_path = tmp_path / "report.json"
        out_path = tmp_path / "kept.units.jsonl"
        code = main(["filter", "--in", str(infile), "--langs", "en,es",
                     "--out", str(out_path), "--report", str(report_path)])
        assert code == 0
        report = json.loads(report_path.read_text(encoding="utf-8"))["rule_based"]
        assert report["dropped_by_rule"] == expected
        assert report["input"] == report["kept"] + sum(report["dropped_by_rule"].values())
        assert len(out_path.read_text(encoding="utf-8").splitlines()) == 15


class TestIndex:
    def test_build_twice_bit_identical(self, tmp_path, tm_tsv):
        one, two = tmp_path / "a.bin", tmp_path / "b.bin"
        for out in (one, two):
            code = main(["index", "build", "--in", str(tm_tsv), "--langs", "en,es",
                         "--out", str(out), "--dim", "384", "--nlist", "3", "--seed", "7"])
            assert code == 0
        assert one.read_bytes() == two.read_bytes()

    def test_search_finds_exact_source(self, tmp_path, tm_tsv, capsys):
        index_path = tmp_path / "tm.bin"
        main(["index", "build", "--in", str(tm_tsv), "--langs", "en,es",
              "--out", str(index_path), "--seed", "7"])
        capsys.readouterr()
        code = main(["index", "search", "--index", str(index_path), "--in", str(tm_tsv),
                     "--langs", "en,es", "--query", "Wash your hands regularly.",
                     "--k", "1", "--json"])
        assert code == 0
        rows = json.loads(capsys.readouterr().out)
        assert rows[0]["source"] == "Wash your hands regularly."
        assert rows[0]["score"] == pytest.approx(1.0, abs=1e-6)


class TestGlossary:
    def test_compile_and_match(self, tmp_path, capsys):
        pairs = tmp_path / "pairs.tsv"
        pairs.write_text(
            "severe fever\tfiebre intensa\n" * 3 + "fever\tfiebre\n" * 2 + "rare\traro\n",
            encoding="utf-8",
        )
        glossary_path = tmp_path / "glossary.tsv"
        assert main(["glossary", "compile", "--pairs", str(pairs),
                     "--out", str(glossary_path)]) == 0
        lines = glossary_path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "severe fever\tfiebre intensa\t3"
        assert "rare\traro\t1" not in lines
        capsys.readouterr()
        assert main(["glossary", "match", "--glossary", str(glossary_path),
                     "--source", "A severe fever today", "--max-terms", "5",
                     "--json"]) == 0
        rows = json.loads(capsys.readouterr().out)
        assert rows[0]["source_term"] == "severe fever"


class TestTranslate:
    def test_zero_shot_mock(self, tm_tsv, capsys):
        code = main(["translate", "--tm", str(tm_tsv), "--langs", "en,es",
                     "--source", "Hello", "--mode", "zero_shot"])
        assert code == 0
        assert capsys.readouterr().out.strip() == "SPANISH:"

    def test_fuzzy_with_trace_json(self, tm_tsv, capsys):
        code = main(["translate", "--tm", str(tm_tsv), "--langs", "en,es",
                     "--source", "The patient has a severe fever.",
                     "--mode", "fuzzy_k", "--k", "2", "--seed", "0",
                     "--trace", "--json"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["prompt"].endswith("English: The patient has a severe fever.\nSpanish:")
        assert len(payload["matches"]) == 2


class TestWlac:
    def test_run_finds_word(self, capsys):
        code = main(["wlac", "run", "--source", "sample sentence 000", "--typed", "qu",
                     "--json"])
        assert code == 0
        body = json.loads(capsys.readouterr().out)
        assert body["word"] is not None and body["word"].startswith("qu")

    def test_eval_prints_accuracy(self, capsys):
        code = main(["wlac", "eval", "--hypotheses", "10", "--top-k", "10",
                     "--runs", "1"])
        assert code == 0
        value = float(capsys.readouterr().out.strip())
        assert 0.0 < value < 1.0


class TestSynth:
    def test_parse_generations(self, tmp_path, capsys):
        infile = tmp_path / "gen.txt"
        infile.write_text('1. {"de": "Eins", "en": "One"}\n2. Zwei ||| Two\n',
                          encoding="utf-8")
        code = main(["synth", "parse", "--in", str(infile), "--langs", "de,en"])
        assert code == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 2
        assert json.loads(lines[0])["source"] == "Eins"

    def test_generate_with_mock(self, capsys):
        code = main(["synth", "generate", "--terms", "Federal Ministry of Science",
                     "--langs", "de,en", "--count", "3", "--hypotheses", "2", "--json"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert len(payload) == 1
        assert len(payload[0]["generations"]) == 2


class TestEvaluate:
    def test_prints_de_en_baseline_average(self, capsys):
        code = main(["evaluate", "terms", "--rows", str(FIXTURES_DIR / "de_en_test.json")])
        assert code == 0
        assert capsys.readouterr().out.strip() == "60.18"


class TestExitCodes:
    def test_usage_error_is_2(self):
        with pytest.raises(SystemExit) as exc_info:
            main(["filter", "--nonsense"])
        assert exc_info.value.code == 2

    def test_domain_error_is_1(self, capsys):
        code = main(["evaluate", "terms", "--rows", "/does/not/exist.json"])
        assert code == 1
        assert "error:" in capsys.readouterr().err
