"""HTTP service: projects, TM upload, adaptive translation, autocompletion,
glossary, terminology post-editing, and term-usage evaluation.

All endpoints speak JSON over HTTP/1.1; errors use problem-details-style
bodies ``{code, message, detail}``. Reads run concurrently; writes to one
project (approve, compile, rebuild, upload) serialize on its lock.
"""

from __future__ import annotations

import threading
import time
from concurrent.futures import ThreadPoolExecutor, TimeoutError as FutureTimeout
from dataclasses import dataclass, field as dc_field
from typing import Any, Callable, Literal

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import wlac as wlac_mod
from .embedding import Embedder, HashEmbedder
from .errors import AdaptMtError, CompletionError, EmptyMatches, EmptySide, SamplerFailure
from .gateway import (
    Gateway,
    MockBackend,
    TokenPolicy,
    TruncateMode,
    extraction_params,
    max_tokens_for,
    translation_params,
    truncate_overgeneration,
)
from .prompts import (
    render_few_shot,
    render_term_ape,
    render_term_extract,
    render_zero_shot,
)
from .retrieval import ProjectIndex, RetrievalConfig
from .store import Project
from .terminology import (
    Glossary,
    compile_glossary,
    count_usage,
    match_terms,
    missing_terms,
    parse_extracted_terms,
    term_used,
    usage_report,
)
from .types import LangCode, SamplingParams, TermPair, TranslationUnit

DEFAULT_EXTRACT_SEPARATOR = "="
DEFAULT_EXTRACT_NUMBER = 5


@dataclass
class ServerSettings:
    api_key: str = ""
    index_seed: int = 0
    nlist: int | None = None
    rebuild_after_approvals: int = 1  # 0 disables auto-retrain on approve
    autocomplete_deadline: float = 5.0
    token_policy: TokenPolicy = dc_field(default_factory=TokenPolicy)
    wlac_config: wlac_mod.WlacConfig = dc_field(
        default_factory=lambda: wlac_mod.WlacConfig(seed=0)
    )


class ApiProblem(Exception):
    def __init__(self, status: int, code: str, message: str, detail: Any = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.detail = detail


class ProjectRuntime:
    def __init__(self, project: Project, embedder: Embedder):
        self.project = project
        self.embedder = embedder
        self.index: ProjectIndex | None = None
        self.glossary: Glossary | None = None
        self.lock = threading.Lock()
        self.approvals_since_rebuild = 0


class AppState:
    def __init__(self, settings: ServerSettings, embedder: Embedder, gateway: Gateway,
                 sampler: wlac_mod.Sampler | None, mt_provider: Callable[[str], str] | None):
        self.settings = settings
        self.embedder = embedder
        self.gateway = gateway
        self.sampler = sampler
        self.mt_provider = mt_provider
        self.projects: dict[str, ProjectRuntime] = {}
        self.executor = ThreadPoolExecutor(max_workers=8)

    def runtime(self, project_id: str) -> ProjectRuntime:
        runtime = self.projects.get(project_id)
        if runtime is None:
            raise ApiProblem(404, "unknown_project", f"no project {project_id!r}")
        return runtime


# -- request / response schemas ---------------------------------------------


class CreateProjectRequest(BaseModel):
    name: str
    src_lang: str
    tgt_lang: str
    src_display_name: str | None = None
    tgt_display_name: str | None = None


class UnitIn(BaseModel):
    source: str
    target: str


class UploadUnitsRequest(BaseModel):
    units: list[UnitIn]


class RebuildRequest(BaseModel):
    seed: int | None = None
    nlist: int | None = None


class TranslateRequest(BaseModel):
    source: str
    mode: Literal["zero_shot", "fuzzy_k", "fuzzy_plus_mt", "terms_zero", "terms_fuzzy",
                  "terms_glossary"]
    k: int | None = None
    max_terms: int | None = None
    include_trace: bool = False


class AutocompleteRequest(BaseModel):
    source: str
    typed: str
    left: str = ""
    right: str = ""


class ApproveRequest(BaseModel):
    source: str
    edited_target: str


class TermIn(BaseModel):
    source_term: str
    target_term: str


class ApeRequest(BaseModel):
    source: str
    translation: str
    term_set: list[TermIn]


class CompileGlossaryRequest(BaseModel):
    pairs: list[TermIn] | None = None
    separator: str = DEFAULT_EXTRACT_SEPARATOR
    number: int = DEFAULT_EXTRACT_NUMBER
    use_stopwords: bool = True


class EvaluateRow(BaseModel):
    term_set: str
    total: int
    used: int


class EvaluateItem(BaseModel):
    translation: str
    term_set: list[TermIn]


class EvaluateTermsRequest(BaseModel):
    rows: list[EvaluateRow] | None = None
    items: list[EvaluateItem] | None = None


# -- helpers ----------------------------------------------------------------


def _term_pairs(terms: list[TermIn]) -> list[TermPair]:
    return [TermPair(source_term=t.source_term, target_term=t.target_term) for t in terms]


def _match_summary(match) -> dict:
    return {
        "unit_id": match.unit.id,
        "source": match.unit.source,
        "target": match.unit.target,
        "similarity": match.similarity,
        "origin": match.unit.origin.value,
    }


def _terms_json(terms: list[TermPair]) -> list[dict]:
    return [
        {"source_term": t.source_term, "target_term": t.target_term, "frequency": t.frequency}
        for t in terms
    ]


def create_app(
    settings: ServerSettings | None = None,
    embedder: Embedder | None = None,
    gateway: Gateway | None = None,
    sampler: wlac_mod.Sampler | None = None,
    mt_provider: Callable[[str], str] | None = None,
) -> FastAPI:
    settings = settings or ServerSettings()
    state = AppState(
        settings=settings,
        embedder=embedder or HashEmbedder(),
        gateway=gateway or Gateway(MockBackend()),
        sampler=sampler,
        mt_provider=mt_provider,
    )
    app = FastAPI(title="adaptmt", version="0.1.0")
    app.state.adaptmt = state

    @app.exception_handler(ApiProblem)
    async def problem_handler(_req: Request, exc: ApiProblem):
        return JSONResponse(
            status_code=exc.status,
            content={"code": exc.code, "message": exc.message, "detail": exc.detail},
        )

    @app.exception_handler(AdaptMtError)
    async def domain_handler(_req: Request, exc: AdaptMtError):
        status = 422
        if isinstance(exc, (CompletionError, SamplerFailure)):
            status = 502
        return JSONResponse(
            status_code=status,
            content={"code": exc.code, "message": str(exc), "detail": None},
        )

    @app.middleware("http")
    async def check_api_key(request: Request, call_next):
        if settings.api_key and request.url.path != "/healthz":
            if request.headers.get("x-api-key") != settings.api_key:
                return JSONResponse(
                    status_code=401,
                    content={"code": "unauthorized", "message": "bad api key", "detail": None},
                )
        return await call_next(request)

    # -- projects ------------------------------------------------------------

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/projects", status_code=201)
    def create_project(req: CreateProjectRequest):
        try:
            src = LangCode.of(req.src_lang, req.src_display_name)
            tgt = LangCode.of(req.tgt_lang, req.tgt_display_name)
        except AdaptMtError as exc:
            raise ApiProblem(422, exc.code, str(exc))
        project = Project(name=req.name, src_lang=src, tgt_lang=tgt)
        state.projects[project.id] = ProjectRuntime(project, state.embedder)
        return _project_json(state.projects[project.id])

    def _project_json(runtime: ProjectRuntime) -> dict:
        project = runtime.project
        return {
            "id": project.id,
            "name": project.name,
            "src_lang": project.src_lang.to_dict(),
            "tgt_lang": project.tgt_lang.to_dict(),
            "tm_size": len(project),
            "index_built": runtime.index is not None,
            "index_in_sync": runtime.index.in_sync if runtime.index else False,
            "glossary_size": len(runtime.glossary) if runtime.glossary else 0,
        }

    @app.get("/projects")
    def list_projects():
        return [_project_json(rt) for rt in state.projects.values()]

    @app.get("/projects/{project_id}")
    def get_project(project_id: str):
        return _project_json(state.runtime(project_id))

    @app.post("/projects/{project_id}/units")
    def upload_units(project_id: str, req: UploadUnitsRequest):
        runtime = state.runtime(project_id)
        project = runtime.project
        units = []
        for item in req.units:
            units.append(
                TranslationUnit(
                    source=item.source, target=item.target,
                    src_lang=project.src_lang, tgt_lang=project.tgt_lang,
                )
            )
        added = project.add_units(units)
        return {"added": added, "tm_size": len(project)}

    @app.post("/projects/{project_id}/index/rebuild")
    def rebuild_index(project_id: str, req: RebuildRequest | None = None):
        runtime = state.runtime(project_id)
        req = req or RebuildRequest()
        with runtime.lock:
            runtime.index = ProjectIndex.build(
                runtime.project,
                runtime.embedder,
                nlist=req.nlist or settings.nlist,
                seed=req.seed if req.seed is not None else settings.index_seed,
            )
            runtime.approvals_since_rebuild = 0
        return {"indexed": runtime.index.indexed_count, "nlist": runtime.index.index.nlist}

    # -- translation -----------------------------------------------------------

    def _retrieve(runtime: ProjectRuntime, source: str, k: int) -> list:
        if runtime.index is None:
            raise ApiProblem(409, "index_stale", "index not built; POST index/rebuild first")
        if not runtime.index.in_sync:
            raise ApiProblem(409, "index_stale", "index out of sync with TM")
        # Identical-source TM entries are wanted context when translating
        # (an approved edit of this very segment should surface at rank 1);
        # self-exclusion is for evaluation-style retrieval only.
        return runtime.index.top_fuzzy(
            source, RetrievalConfig(top_k=k, exclude_exact_self=False)
        )

    def _glossary_or_problem(runtime: ProjectRuntime) -> Glossary:
        if runtime.glossary is None:
            raise ApiProblem(409, "glossary_missing", "compile the glossary first")
        return runtime.glossary

    def _auxiliary_mt(source: str) -> str:
        if state.mt_provider is None:
            raise ApiProblem(502, "backend_error", "no auxiliary MT provider configured")
        return state.mt_provider(source)

    @app.post("/projects/{project_id}/translate")
    def translate(project_id: str, req: TranslateRequest):
        runtime = state.runtime(project_id)
        project = runtime.project
        started = time.perf_counter()
        fuzzy = []
        prompt_terms: list[TermPair] = []
        src, tgt = project.src_lang, project.tgt_lang

        if req.mode in ("fuzzy_k", "fuzzy_plus_mt", "terms_fuzzy") and not req.k:
            raise ApiProblem(422, "missing_k", f"mode {req.mode!r} requires k")
        if req.mode in ("terms_zero", "terms_fuzzy", "terms_glossary") and not req.max_terms:
            raise ApiProblem(422, "missing_max_terms", f"mode {req.mode!r} requires max_terms")

        if req.mode == "zero_shot":
            rendered = render_zero_shot(src, tgt, req.source)
        elif req.mode == "fuzzy_k":
            fuzzy = _retrieve(runtime, req.source, req.k)
            if not fuzzy:
                raise ApiProblem(422, EmptyMatches.code, "no fuzzy matches retrievable")
            rendered = render_few_shot(src, tgt, req.source, fuzzy)
        elif req.mode == "fuzzy_plus_mt":
            fuzzy = _retrieve(runtime, req.source, req.k)
            if not fuzzy:
                raise ApiProblem(422, EmptyMatches.code, "no fuzzy matches retrievable")
            rendered = render_few_shot(src, tgt, req.source, fuzzy,
                                       mt_segment=_auxiliary_mt(req.source))
        elif req.mode == "terms_zero":
            glossary = _glossary_or_problem(runtime)
            prompt_terms = match_terms(req.source, glossary, req.max_terms)
            if not prompt_terms:
                rendered = render_zero_shot(src, tgt, req.source)
            else:
                rendered = render_zero_shot(src, tgt, req.source, terms=prompt_terms)
        elif req.mode == "terms_glossary":
            glossary = _glossary_or_problem(runtime)
            fuzzy = _retrieve(runtime, req.source, req.k or 2)
            if not fuzzy:
                raise ApiProblem(422, EmptyMatches.code, "no fuzzy matches retrievable")
            prompt_terms = match_terms(req.source, glossary, req.max_terms)
            per_match = [match_terms(m.unit.source, glossary, req.max_terms) for m in fuzzy]
            rendered = render_few_shot(src, tgt, req.source, fuzzy,
                                       terms_per_match=per_match, final_terms=prompt_terms)
        else:  # terms_fuzzy
            glossary = _glossary_or_problem(runtime)
            fuzzy = _retrieve(runtime, req.source, req.k)
            if not fuzzy:
                raise ApiProblem(422, EmptyMatches.code, "no fuzzy matches retrievable")
            per_match = [match_terms(m.unit.source, glossary, req.max_terms) for m in fuzzy]
            # Terms for the new segment: those of its fuzzy matches that
            # occur among the source's own n-grams, in glossary order.
            seen: set[str] = set()
            pooled: list[TermPair] = []
            for terms in per_match:
                for term in terms:
                    if term.source_term not in seen:
                        seen.add(term.source_term)
                        pooled.append(term)
            pooled_glossary = Glossary(
                entries=tuple(sorted(pooled, key=lambda t: (-t.src_ngram_len, -t.frequency,
                                                            t.source_term))))
            prompt_terms = match_terms(req.source, pooled_glossary, req.max_terms)
            rendered = render_few_shot(src, tgt, req.source, fuzzy,
                                       terms_per_match=per_match, final_terms=prompt_terms)

        params = translation_params(
            max_new_tokens=max_tokens_for([req.source], tgt, settings.token_policy)
        )
        completion = state.gateway.complete_batch([rendered], params)[0]
        translation = truncate_overgeneration(completion, TruncateMode.FIRST_LINE)
        latency_ms = (time.perf_counter() - started) * 1000.0
        response = {
            "translation": translation,
            "fuzzy_matches": [_match_summary(m) for m in fuzzy],
            "terms_used_in_prompt": _terms_json(prompt_terms),
            "latency_ms": latency_ms,
        }
        if req.include_trace:
            response["prompt_trace"] = {
                "text": rendered.text,
                "expected_stop": rendered.expected_stop,
                "slots_used": rendered.slots_used,
            }
        return response

    # -- autocompletion --------------------------------------------------------

    @app.post("/projects/{project_id}/autocomplete")
    def autocomplete(project_id: str, req: AutocompleteRequest):
        state.runtime(project_id)  # 404 check
        if state.sampler is None:
            raise ApiProblem(502, "sampler_missing", "no autocompletion sampler configured")
        try:
            query = wlac_mod.WlacQuery(source=req.source, typed=req.typed,
                                       left_context=req.left, right_context=req.right)
        except AdaptMtError as exc:
            raise ApiProblem(422, exc.code, str(exc))
        future = state.executor.submit(wlac_mod.autocomplete, query, state.sampler,
                                       settings.wlac_config)
        try:
            result = future.result(timeout=settings.autocomplete_deadline)
        except FutureTimeout:
            raise ApiProblem(
                504, "deadline", "autocompletion exceeded the configured deadline",
                detail={"word": None, "run_found": None, "candidates_scanned": 0,
                        "used_prefix": False, "timed_out": True},
            )
        except SamplerFailure as exc:
            raise ApiProblem(502, exc.code, str(exc))
        return {
            "word": result.word,
            "run_found": result.run_found,
            "candidates_scanned": result.candidates_scanned,
            "used_prefix": result.used_prefix,
            "timed_out": False,
        }

    # -- feedback ---------------------------------------------------------------

    @app.post("/projects/{project_id}/approve")
    def approve(project_id: str, req: ApproveRequest):
        runtime = state.runtime(project_id)
        try:
            unit = runtime.project.approve_edit(req.source, req.edited_target)
        except EmptySide as exc:
            raise ApiProblem(422, exc.code, str(exc))
        with runtime.lock:
            if runtime.index is not None and not runtime.index.in_sync:
                runtime.index.absorb_new_units()
                runtime.approvals_since_rebuild += 1
                if (
                    settings.rebuild_after_approvals
                    and runtime.approvals_since_rebuild >= settings.rebuild_after_approvals
                ):
                    runtime.index = ProjectIndex.build(
                        runtime.project, runtime.embedder,
                        nlist=settings.nlist, seed=settings.index_seed,
                    )
                    runtime.approvals_since_rebuild = 0
        return {"unit_id": unit.id, "tm_size": len(runtime.project)}

    # -- terminology --------------------------------------------------------------

    @app.post("/projects/{project_id}/terms/ape")
    def term_ape(project_id: str, req: ApeRequest):
        runtime = state.runtime(project_id)
        project = runtime.project
        term_set = _term_pairs(req.term_set)
        missing_before = missing_terms(req.translation, term_set)
        if not missing_before:
            return {
                "post_edited": req.translation,
                "missing_before": 0,
                "missing_after": 0,
                "backend_calls": 0,
            }
        rendered = render_term_ape(project.src_lang, project.tgt_lang, req.source,
                                   req.translation, missing_before)
        max_new = max_tokens_for([req.source], project.tgt_lang, settings.token_policy)
        candidates = []
        for temperature in (0.0, 0.2):
            params = SamplingParams(top_p=1.0, temperature=temperature,
                                    max_new_tokens=max_new, stop_sequences=())
            completion = state.gateway.complete_batch([rendered], params)[0].strip()
            label = f"{project.tgt_lang.display_name}: "
            if completion.startswith(label):
                completion = completion[len(label):]
            fixed = sum(1 for t in term_set if term_used(completion, t))
            candidates.append((fixed, temperature, completion))
        # Most terms fixed wins; ties go to the temperature-0 generation.
        candidates.sort(key=lambda c: (-c[0], c[1]))
        _, _, post_edited = candidates[0]
        return {
            "post_edited": post_edited,
            "missing_before": len(missing_before),
            "missing_after": len(missing_terms(post_edited, term_set)),
            "backend_calls": 2,
        }

    @app.post("/projects/{project_id}/glossary/compile")
    def glossary_compile(project_id: str, req: CompileGlossaryRequest):
        runtime = state.runtime(project_id)
        project = runtime.project
        stopwords: set[str] = set()
        if req.use_stopwords:
            from .terminology import default_stopwords

            stopwords = default_stopwords(project.src_lang.code) | default_stopwords(
                project.tgt_lang.code
            )
        if req.pairs is not None:
            occurrences = [(t.source_term, t.target_term) for t in req.pairs]
        else:
            # Extract terms from every TM pair via the completion backend.
            occurrences = []
            params = extraction_params()
            for unit in project.units:
                rendered = render_term_extract(unit, req.number, req.separator)
                completion = state.gateway.complete_batch([rendered], params)[0]
                try:
                    parsed = parse_extracted_terms("1." + completion, req.separator)
                except AdaptMtError:
                    continue
                occurrences.extend((t.source_term, t.target_term) for t in parsed)
        with runtime.lock:
            runtime.glossary = compile_glossary(
                occurrences, stopwords, src_lang=project.src_lang, tgt_lang=project.tgt_lang
            )
        return {"entries": _terms_json(list(runtime.glossary.entries))}

    @app.get("/projects/{project_id}/glossary")
    def glossary_get(project_id: str):
        runtime = state.runtime(project_id)
        if runtime.glossary is None:
            raise ApiProblem(404, "glossary_missing", "glossary not compiled")
        return {"entries": _terms_json(list(runtime.glossary.entries))}

    @app.post("/projects/{project_id}/evaluate/terms")
    def evaluate_terms(project_id: str, req: EvaluateTermsRequest):
        state.runtime(project_id)  # 404 check
        if req.rows:
            report = usage_report([(r.term_set, r.total, r.used) for r in req.rows])
        elif req.items:
            total, used = count_usage(
                [(item.translation, _term_pairs(item.term_set)) for item in req.items]
            )
            report = usage_report([("all", max(total, 1), used)])
        else:
            raise ApiProblem(422, "malformed", "provide rows or items")
        return {
            "rows": [
                {"term_set": r.term_set, "total": r.total, "used": r.used,
                 "pct": round(r.pct, 4)}
                for r in report.rows
            ],
            "avg_pct": report.avg_pct,
        }

    return app
