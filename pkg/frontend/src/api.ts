/**
 * Typed client for the adaptmt server JSON routes. The workbench talks to
 * the backend exclusively through this module; the TM is only ever
 * mutated via approve().
 */

export interface LangInfo {
  code: string;
  display_name: string;
}

export interface ProjectInfo {
  id: string;
  name: string;
  src_lang: LangInfo;
  tgt_lang: LangInfo;
  tm_size: number;
  index_built: boolean;
  index_in_sync: boolean;
  glossary_size: number;
}

export interface FuzzyMatchSummary {
  unit_id: string;
  source: string;
  target: string;
  similarity: number;
  origin: string;
}

export interface TermPairInfo {
  source_term: string;
  target_term: string;
  frequency?: number;
}

export interface PromptTrace {
  text: string;
  expected_stop: string | null;
  slots_used: Record<string, string>;
}

export interface TranslateResponse {
  translation: string;
  fuzzy_matches: FuzzyMatchSummary[];
  terms_used_in_prompt: TermPairInfo[];
  latency_ms: number;
  prompt_trace?: PromptTrace;
}

export type TranslateMode =
  | "zero_shot"
  | "fuzzy_k"
  | "fuzzy_plus_mt"
  | "terms_zero"
  | "terms_fuzzy"
  | "terms_glossary";

export interface AutocompleteResponse {
  word: string | null;
  run_found: number | null;
  candidates_scanned: number;
  used_prefix: boolean;
  timed_out: boolean;
}

export interface ApproveResponse {
  unit_id: string;
  tm_size: number;
}

export interface ApiProblem {
  code: string;
  message: string;
  detail: unknown;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly problem: ApiProblem,
  ) {
    super(`${problem.code}: ${problem.message}`);
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
    private readonly apiKey: string = "",
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = { "Content-Type": "application/json" };
    if (this.apiKey) headers["X-Api-Key"] = this.apiKey;
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await response.json();
    if (!response.ok) {
      throw new ApiError(response.status, payload as ApiProblem);
    }
    return payload as T;
  }

  healthz(): Promise<{ status: string }> {
    return this.request("GET", "/healthz");
  }

  createProject(name: string, srcLang: string, tgtLang: string): Promise<ProjectInfo> {
    return this.request("POST", "/projects", {
      name,
      src_lang: srcLang,
      tgt_lang: tgtLang,
    });
  }

  getProject(projectId: string): Promise<ProjectInfo> {
    return this.request("GET", `/projects/${projectId}`);
  }

  uploadUnits(
    projectId: string,
    units: { source: string; target: string }[],
  ): Promise<{ added: number; tm_size: number }> {
    return this.request("POST", `/projects/${projectId}/units`, { units });
  }

  rebuildIndex(projectId: string): Promise<{ indexed: number; nlist: number }> {
    return this.request("POST", `/projects/${projectId}/index/rebuild`, {});
  }

  translate(
    projectId: string,
    source: string,
    mode: TranslateMode,
    options: { k?: number; maxTerms?: number; includeTrace?: boolean } = {},
  ): Promise<TranslateResponse> {
    return this.request("POST", `/projects/${projectId}/translate`, {
      source,
      mode,
      k: options.k,
      max_terms: options.maxTerms,
      include_trace: options.includeTrace ?? false,
    });
  }

  autocomplete(
    projectId: string,
    source: string,
    typed: string,
    left: string,
    right: string,
  ): Promise<AutocompleteResponse> {
    return this.request("POST", `/projects/${projectId}/autocomplete`, {
      source,
      typed,
      left,
      right,
    });
  }

  approve(projectId: string, source: string, editedTarget: string): Promise<ApproveResponse> {
    return this.request("POST", `/projects/${projectId}/approve`, {
      source,
      edited_target: editedTarget,
    });
  }

  glossary(projectId: string): Promise<{ entries: TermPairInfo[] }> {
    return this.request("GET", `/projects/${projectId}/glossary`);
  }
}
