"""Batch command-line frontend.

Exit codes: 0 success, 1 domain error, 2 usage error. stdout carries data
(plain or ``--json``); diagnostics go to stderr. Every subcommand with a
``--seed`` flag is bit-reproducible.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import wlac as wlac_mod
from .embedding import HashEmbedder
from .errors import AdaptMtError, PartialBatch
from .gateway import (
    BackendConfig,
    BackendKind,
    Gateway,
    TruncateMode,
    translation_params,
    truncate_overgeneration,
)
from .ivf import IvfIndex, SearchParams, default_nlist
from .pipeline import (
    FilterConfig,
    GenerationJob,
    generate_synthetic,
    parse_bilingual_generation,
    rule_filter,
    semantic_filter,
)
from .prompts import render_few_shot, render_synth_gen, render_zero_shot
from .retrieval import ProjectIndex, RetrievalConfig
from .store import CorpusFile, CorpusFormat, Project, load_corpus, save_units_jsonl
from .terminology import (
    compile_glossary,
    default_stopwords,
    load_glossary_tsv,
    match_terms,
    save_glossary_tsv,
    usage_report,
)
from .types import LangCode, SamplingParams


def _langs(spec: str) -> tuple[LangCode, LangCode]:
    try:
        src, tgt = spec.split(",")
    except ValueError:
        raise AdaptMtError(f"--langs expects 'src,tgt', got {spec!r}")
    return LangCode.of(src.strip()), LangCode.of(tgt.strip())


def _corpus_format(path: str) -> CorpusFormat:
    return CorpusFormat.JSONL_UNITS if path.endswith(".jsonl") else CorpusFormat.TSV_BITEXT


def _load_units(path: str, src: LangCode, tgt: LangCode):
    result = load_corpus(CorpusFile(path=path, format=_corpus_format(path)), src, tgt)
    if result.skipped:
        print(f"skipped {result.skipped} malformed lines in {path}", file=sys.stderr)
    return result.units


def _emit(payload, as_json: bool, plain: str | None = None) -> None:
    if as_json:
        print(json.dumps(payload, ensure_ascii=False))
    else:
        print(plain if plain is not None else payload)


# -- subcommand handlers -----------------------------------------------------


def cmd_filter(args) -> int:
    src, tgt = _langs(args.langs)
    units = _load_units(args.infile, src, tgt)
    cfg = FilterConfig(max_len_words=args.max_len_words, max_ratio=args.max_ratio)
    stream, report = rule_filter(units, cfg)
    kept = list(stream)
    reports = [("rule_based", report)]
    if args.semantic:
        stream, sem_report = semantic_filter(kept, HashEmbedder(), args.sem_threshold)
        kept = list(stream)
        reports.append(("semantic", sem_report))
    if args.out:
        save_units_jsonl(kept, args.out)
        print(f"wrote {len(kept)} units to {args.out}", file=sys.stderr)
    combined = {name: rep.to_dict() for name, rep in reports}
    if args.report:
        Path(args.report).write_text(json.dumps(combined, indent=2), encoding="utf-8")
    _emit(combined, args.json, plain=json.dumps(combined))
    return 0


def cmd_index_build(args) -> int:
    src, tgt = _langs(args.langs)
    units = _load_units(args.infile, src, tgt)
    embedder = HashEmbedder(dim=args.dim)
    vectors = embedder.embed_batch([u.source for u in units])
    nlist = args.nlist or default_nlist(len(vectors))
    index = IvfIndex.train(vectors, nlist=nlist, seed=args.seed)
    for position, vector in enumerate(vectors):
        index.add(position, vector)
    index.save(args.out)
    _emit({"indexed": index.count, "nlist": nlist, "dim": args.dim, "out": args.out},
          args.json, plain=f"indexed {index.count} vectors into {args.out} (nlist={nlist})")
    return 0


def cmd_index_search(args) -> int:
    src, tgt = _langs(args.langs)
    units = _load_units(args.infile, src, tgt)
    index = IvfIndex.load(args.index)
    embedder = HashEmbedder(dim=index.dim)
    query = embedder.embed_batch([args.query])[0]
    nprobe = args.nprobe or index.nlist
    hits = index.search(query, SearchParams(k=args.k, nprobe=nprobe))
    rows = [
        {"id": hit_id, "score": score,
         "source": units[hit_id].source if hit_id < len(units) else None}
        for hit_id, score in hits
    ]
    _emit(rows, args.json, plain="\n".join(f"{r['score']:.6f}\t{r['source']}" for r in rows))
    return 0


def cmd_glossary_compile(args) -> int:
    pairs = []
    for line in Path(args.pairs).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        src_term, _, tgt_term = line.partition("\t")
        pairs.append((src_term.strip(), tgt_term.strip()))
    stopwords: set[str] = set()
    for code in (args.stopwords.split(",") if args.stopwords else []):
        stopwords |= default_stopwords(code.strip())
    glossary = compile_glossary(pairs, stopwords)
    save_glossary_tsv(glossary, args.out)
    _emit({"entries": len(glossary), "out": args.out}, args.json,
          plain=f"compiled {len(glossary)} glossary entries into {args.out}")
    return 0


def cmd_glossary_match(args) -> int:
    glossary = load_glossary_tsv(args.glossary)
    terms = match_terms(args.source, glossary, args.max_terms)
    rows = [{"source_term": t.source_term, "target_term": t.target_term} for t in terms]
    _emit(rows, args.json,
          plain="\n".join(f"{t.source_term}\t{t.target_term}" for t in terms))
    return 0


def _make_gateway(args) -> Gateway:
    kind = BackendKind.MOCK if args.backend == "mock" else BackendKind.HTTP_COMPLETION
    cfg = BackendConfig(kind=kind, endpoint=args.endpoint or "", batch_size=args.batch_size)
    return Gateway.from_config(cfg)


def cmd_translate(args) -> int:
    src, tgt = _langs(args.langs)
    units = _load_units(args.tm, src, tgt)
    project = Project(name="cli", src_lang=src, tgt_lang=tgt)
    project.add_units(units)
    gateway = _make_gateway(args)
    matches = []
    if args.mode == "zero_shot":
        rendered = render_zero_shot(src, tgt, args.source)
    else:
        index = ProjectIndex.build(project, HashEmbedder(), seed=args.seed)
        matches = index.top_fuzzy(
            args.source, RetrievalConfig(top_k=args.k, exclude_exact_self=False)
        )
        rendered = render_few_shot(src, tgt, args.source, matches)
    completion = gateway.complete_batch([rendered], translation_params())[0]
    translation = truncate_overgeneration(completion, TruncateMode.FIRST_LINE)
    payload = {
        "translation": translation,
        "matches": [
            {"source": m.unit.source, "target": m.unit.target, "similarity": m.similarity}
            for m in matches
        ],
    }
    if args.trace:
        payload["prompt"] = rendered.text
    _emit(payload, args.json, plain=translation)
    return 0


def _load_wlac_fixture(path: str | None) -> dict:
    if path:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    from importlib import resources

    return json.loads(
        resources.files("adaptmt").joinpath("data", "wlac_fixture.json").read_text("utf-8")
    )


def cmd_wlac_run(args) -> int:
    fixture = _load_wlac_fixture(args.fixture)
    sampler = wlac_mod.MockSampler.from_fixture(fixture)
    cfg = wlac_mod.WlacConfig(num_hypotheses=args.hypotheses, top_k=args.top_k,
                              max_runs=args.runs, seed=args.seed)
    query = wlac_mod.WlacQuery(source=args.source, typed=args.typed,
                               left_context=args.left or "", right_context=args.right or "")
    result = wlac_mod.autocomplete(query, sampler, cfg)
    payload = {
        "word": result.word,
        "run_found": result.run_found,
        "candidates_scanned": result.candidates_scanned,
        "used_prefix": result.used_prefix,
    }
    _emit(payload, args.json, plain=result.word or "")
    return 0


def cmd_wlac_eval(args) -> int:
    fixture = _load_wlac_fixture(args.fixture)
    sampler = wlac_mod.MockSampler.from_fixture(fixture)
    cfg = wlac_mod.WlacConfig(num_hypotheses=args.hypotheses, top_k=args.top_k,
                              max_runs=args.runs, seed=args.seed
                              if args.seed is not None else fixture.get("seed"))
    results = []
    for q in fixture["queries"]:
        query = wlac_mod.WlacQuery(source=q["source"], typed=q["typed"],
                                   left_context=q.get("left", ""),
                                   right_context=q.get("right", ""))
        results.append((wlac_mod.autocomplete(query, sampler, cfg), q.get("gold")))
    accuracy = sum(1 for r, g in results if g is not None and r.word == g) / len(results)
    _emit({"accuracy": accuracy, "queries": len(results)}, args.json,
          plain=f"{accuracy:.4f}")
    return 0


def cmd_synth_generate(args) -> int:
    src, tgt = _langs(args.langs)
    gateway = _make_gateway(args)
    prompts = [render_synth_gen(term.strip(), args.count, src, tgt).text
               for term in args.terms.split(",")]
    params = SamplingParams(top_k=50, top_p=0.95, temperature=1.0,
                            max_new_tokens=300, num_hypotheses=args.hypotheses)
    pool = ThreadPoolExecutor(max_workers=max(1, args.threads))

    def provider(prompt: str, p: SamplingParams) -> list[str]:
        # Hypotheses for one prompt fan out across the worker pool.
        futures = [pool.submit(lambda: gateway.complete_batch([prompt], p)[0])
                   for _ in range(p.num_hypotheses)]
        return [f.result() for f in futures]

    try:
        job = GenerationJob(prompts=prompts, params=params, provider=provider)
        try:
            results = generate_synthetic(job)
        except PartialBatch as exc:
            print(f"{len(exc.failures)} prompts failed", file=sys.stderr)
            results = exc.successes
    finally:
        pool.shutdown()
    payload = [
        {"prompt": r.prompt, "generations": [list(g) for g in r.generations]}
        for r in results
    ]
    _emit(payload, args.json, plain=json.dumps(payload, ensure_ascii=False))
    return 0


def cmd_synth_parse(args) -> int:
    src, tgt = _langs(args.langs)
    text = Path(args.infile).read_text(encoding="utf-8")
    parsed = parse_bilingual_generation(text, src, tgt)
    if parsed.skipped:
        print(f"skipped {parsed.skipped} unparseable lines", file=sys.stderr)
    if args.out:
        save_units_jsonl(parsed.units, args.out)
        print(f"wrote {len(parsed.units)} units to {args.out}", file=sys.stderr)
    else:
        for unit in parsed.units:
            print(json.dumps(unit.to_dict(), ensure_ascii=False))
    return 0


def cmd_evaluate_terms(args) -> int:
    data = json.loads(Path(args.rows).read_text(encoding="utf-8"))
    rows = [(r["term_set"], int(r["total"]), int(r["used"])) for r in data["rows"]]
    report = usage_report(rows)
    payload = {
        "rows": [
            {"term_set": r.term_set, "total": r.total, "used": r.used} for r in report.rows
        ],
        "avg_pct": report.avg_pct,
    }
    _emit(payload, args.json, plain=f"{report.avg_pct:.2f}")
    return 0


def cmd_serve(args) -> int:
    """Settings precedence: flags > config file > ADAPTMT_* environment."""
    import os

    import uvicorn

    from .gateway import TokenPolicy
    from .server import ServerSettings, create_app

    config: dict = {}
    if args.config:
        raw = Path(args.config).read_text(encoding="utf-8")
        if args.config.endswith(".toml"):
            import tomllib

            config = tomllib.loads(raw)
        else:
            config = json.loads(raw)

    def setting(key: str, default):
        return config.get(key, os.environ.get(f"ADAPTMT_{key.upper()}", default))

    settings = ServerSettings()
    settings.api_key = str(setting("api_key", settings.api_key))
    settings.index_seed = int(setting("index_seed", settings.index_seed))
    policy_file = setting("token_policy", "")
    if policy_file:
        policy = json.loads(Path(policy_file).read_text(encoding="utf-8"))
        settings.token_policy = TokenPolicy(
            multiplier_by_lang={k: int(v) for k, v in policy.get("multipliers", {}).items()},
            default_multiplier=int(policy.get("default_multiplier", 4)),
            floor=int(policy.get("floor", 16)),
        )
    backend = args.backend or str(setting("backend", "mock"))
    if not args.endpoint:
        args.endpoint = str(setting("endpoint", "")) or None
    args.backend = backend
    sampler = None
    fixture_path = setting("wlac_fixture", None)
    if args.wlac_fixture or fixture_path or backend == "mock":
        fixture = _load_wlac_fixture(args.wlac_fixture or fixture_path)
        sampler = wlac_mod.MockSampler.from_fixture(fixture)
    gateway = _make_gateway(args)
    app = create_app(settings=settings, gateway=gateway, sampler=sampler)
    host = args.host or str(setting("host", "127.0.0.1"))
    port = args.port or int(setting("port", 8000))
    uvicorn.run(app, host=host, port=port, log_level="warning")
    return 0


# -- argument wiring ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adaptmt", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_json(p):
        p.add_argument("--json", action="store_true", help="machine-readable output")

    p = sub.add_parser("filter", help="rule-based (and optional semantic) corpus filtering")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--langs", required=True, help="src,tgt")
    p.add_argument("--out")
    p.add_argument("--report")
    p.add_argument("--max-len-words", type=int, default=200)
    p.add_argument("--max-ratio", type=float, default=2.0)
    p.add_argument("--semantic", action="store_true")
    p.add_argument("--sem-threshold", type=float, default=0.45)
    add_json(p)
    p.set_defaults(func=cmd_filter)

    p_index = sub.add_parser("index", help="ANN index operations")
    index_sub = p_index.add_subparsers(dest="index_command", required=True)

    p = index_sub.add_parser("build")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--langs", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dim", type=int, default=384)
    p.add_argument("--nlist", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    add_json(p)
    p.set_defaults(func=cmd_index_build)

    p = index_sub.add_parser("search")
    p.add_argument("--index", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--langs", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--nprobe", type=int, default=0)
    add_json(p)
    p.set_defaults(func=cmd_index_search)

    p_gloss = sub.add_parser("glossary", help="glossary compilation and matching")
    gloss_sub = p_gloss.add_subparsers(dest="glossary_command", required=True)

    p = gloss_sub.add_parser("compile")
    p.add_argument("--pairs", required=True, help="TSV of term-pair occurrences")
    p.add_argument("--out", required=True)
    p.add_argument("--stopwords", help="comma-separated language codes")
    add_json(p)
    p.set_defaults(func=cmd_glossary_compile)

    p = gloss_sub.add_parser("match")
    p.add_argument("--glossary", required=True)
    p.add_argument("--source", required=True)
    p.add_argument("--max-terms", type=int, default=5)
    add_json(p)
    p.set_defaults(func=cmd_glossary_match)

    p = sub.add_parser("translate", help="translate one segment with a TM")
    p.add_argument("--tm", required=True)
    p.add_argument("--langs", required=True)
    p.add_argument("--source", required=True)
    p.add_argument("--mode", choices=["zero_shot", "fuzzy_k"], default="zero_shot")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--backend", choices=["mock", "http"], default="mock")
    p.add_argument("--endpoint")
    p.add_argument("--batch-size", type=int, default=20)
    p.add_argument("--trace", action="store_true")
    add_json(p)
    p.set_defaults(func=cmd_translate)

    p_wlac = sub.add_parser("wlac", help="word-level autocompletion")
    wlac_sub = p_wlac.add_subparsers(dest="wlac_command", required=True)

    p = wlac_sub.add_parser("run")
    p.add_argument("--fixture", help="mock sampler fixture (default: shipped demo)")
    p.add_argument("--source", required=True)
    p.add_argument("--typed", required=True)
    p.add_argument("--left")
    p.add_argument("--right")
    p.add_argument("--hypotheses", type=int, default=10)
    p.add_argument("--top-k", type=int, default=10)
    p.add_argument("--runs", type=int, default=5)
    p.add_argument("--seed", type=int, default=None)
    add_json(p)
    p.set_defaults(func=cmd_wlac_run)

    p = wlac_sub.add_parser("eval")
    p.add_argument("--fixture", help="fixture with a query suite (default: shipped demo)")
    p.add_argument("--hypotheses", type=int, default=10)
    p.add_argument("--top-k", type=int, default=10)
    p.add_argument("--runs", type=int, default=5)
    p.add_argument("--seed", type=int, default=None)
    add_json(p)
    p.set_defaults(func=cmd_wlac_eval)

    p_synth = sub.add_parser("synth", help="terminology-based synthetic data")
    synth_sub = p_synth.add_subparsers(dest="synth_command", required=True)

    p = synth_sub.add_parser("generate")
    p.add_argument("--terms", required=True, help="comma-separated terms")
    p.add_argument("--langs", required=True)
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--hypotheses", type=int, default=5)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--backend", choices=["mock", "http"], default="mock")
    p.add_argument("--endpoint")
    p.add_argument("--batch-size", type=int, default=20)
    add_json(p)
    p.set_defaults(func=cmd_synth_generate)

    p = synth_sub.add_parser("parse")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--langs", required=True)
    p.add_argument("--out")
    add_json(p)
    p.set_defaults(func=cmd_synth_parse)

    p_eval = sub.add_parser("evaluate", help="evaluation reports")
    eval_sub = p_eval.add_subparsers(dest="evaluate_command", required=True)

    p = eval_sub.add_parser("terms")
    p.add_argument("--rows", required=True, help="JSON file with per-set counts")
    add_json(p)
    p.set_defaults(func=cmd_evaluate_terms)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host")
    p.add_argument("--port", type=int, default=0)
    p.add_argument("--config", help="TOML or JSON settings file")
    p.add_argument("--backend", choices=["mock", "http"], default=None)
    p.add_argument("--endpoint")
    p.add_argument("--batch-size", type=int, default=20)
    p.add_argument("--wlac-fixture")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AdaptMtError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
