/**
 * Segment editor state machine: draft editing, the approve-to-TM loop,
 * fuzzy-match panel, and terminology chips with used/unused status.
 *
 * The TM is only ever written through approve(); everything else is
 * read-only against the server.
 */

import {
  ApiError,
  ApproveResponse,
  FuzzyMatchSummary,
  PromptTrace,
  TermPairInfo,
  TranslateMode,
  TranslateResponse,
} from "./api.js";

export interface EditorApi {
  translate(
    projectId: string,
    source: string,
    mode: TranslateMode,
    options?: { k?: number; maxTerms?: number; includeTrace?: boolean },
  ): Promise<TranslateResponse>;
  approve(projectId: string, source: string, editedTarget: string): Promise<ApproveResponse>;
}

export interface Segment {
  source: string;
  draft: string;
}

export interface TermChip {
  sourceTerm: string;
  targetTerm: string;
  used: boolean;
}

export interface EditorSnapshot {
  activeIndex: number;
  source: string;
  draft: string;
  tmSize: number;
  fuzzyPanel: FuzzyMatchSummary[];
  termChips: TermChip[];
  trace: PromptTrace | null;
  suggestion: string | null;
  validationMessage: string | null;
  machineTranslation: string;
}

export interface EditorOptions {
  fuzzyK?: number;
  includeTrace?: boolean;
  onChange?: (snapshot: EditorSnapshot) => void;
}

const CJK_RE = /[⺀-鿿가-힯]/;

/** Client-side mirror of the server's default term-usage rule. */
export function termUsedInDraft(draft: string, targetTerm: string): boolean {
  if (!draft) return false;
  if (CJK_RE.test(targetTerm) || CJK_RE.test(draft)) {
    return draft.includes(targetTerm);
  }
  const escaped = targetTerm.replace(/[.*+?^${}()|[\]\\]/g, "\\$&");
  return new RegExp(`(?<![\\w])${escaped}(?![\\w])`, "i").test(draft);
}

export class EditorController {
  readonly segments: Segment[];
  activeIndex = 0;
  tmSize = 0;
  fuzzyPanel: FuzzyMatchSummary[] = [];
  terms: TermPairInfo[] = [];
  trace: PromptTrace | null = null;
  suggestion: string | null = null;
  validationMessage: string | null = null;
  machineTranslation = "";

  private readonly fuzzyK: number;
  private readonly includeTrace: boolean;
  private readonly onChange: (snapshot: EditorSnapshot) => void;

  constructor(
    private readonly api: EditorApi,
    private readonly projectId: string,
    segments: { source: string }[],
    options: EditorOptions = {},
  ) {
    this.segments = segments.map((s) => ({ source: s.source, draft: "" }));
    this.fuzzyK = options.fuzzyK ?? 5;
    this.includeTrace = options.includeTrace ?? true;
    this.onChange = options.onChange ?? (() => {});
  }

  get activeSegment(): Segment {
    return this.segments[this.activeIndex];
  }

  snapshot(): EditorSnapshot {
    return {
      activeIndex: this.activeIndex,
      source: this.activeSegment.source,
      draft: this.activeSegment.draft,
      tmSize: this.tmSize,
      fuzzyPanel: this.fuzzyPanel,
      termChips: this.termChips(),
      trace: this.trace,
      suggestion: this.suggestion,
      validationMessage: this.validationMessage,
      machineTranslation: this.machineTranslation,
    };
  }

  termChips(): TermChip[] {
    return this.terms.map((t) => ({
      sourceTerm: t.source_term,
      targetTerm: t.target_term,
      used: termUsedInDraft(this.activeSegment.draft, t.target_term),
    }));
  }

  /** Open a segment and refresh its fuzzy panel and MT suggestion. */
  async openSegment(index: number): Promise<void> {
    this.activeIndex = index;
    this.validationMessage = null;
    this.trace = null;
    this.fuzzyPanel = [];
    this.machineTranslation = "";
    await this.refreshPanel();
    this.onChange(this.snapshot());
  }

  async refreshPanel(): Promise<void> {
    const source = this.activeSegment.source;
    try {
      const response = await this.api.translate(this.projectId, source, "fuzzy_k", {
        k: this.fuzzyK,
        includeTrace: this.includeTrace,
      });
      this.fuzzyPanel = response.fuzzy_matches;
      this.terms = response.terms_used_in_prompt;
      this.trace = response.prompt_trace ?? null;
      this.machineTranslation = response.translation;
    } catch (error) {
      if (error instanceof ApiError && (error.status === 409 || error.status === 422)) {
        // no index or no matches yet: fall back to zero-shot MT
        const response = await this.api.translate(this.projectId, source, "zero_shot", {
          includeTrace: this.includeTrace,
        });
        this.fuzzyPanel = [];
        this.terms = response.terms_used_in_prompt;
        this.trace = response.prompt_trace ?? null;
        this.machineTranslation = response.translation;
      } else {
        throw error;
      }
    }
  }

  setDraft(draft: string): void {
    this.activeSegment.draft = draft;
    this.validationMessage = null;
    this.onChange(this.snapshot());
  }

  /** Insert an accepted suggestion, completing the word at the caret. */
  insertWord(word: string, caret: number, typedStart: number): string {
    const draft = this.activeSegment.draft;
    const next = draft.slice(0, typedStart) + word + draft.slice(caret);
    this.activeSegment.draft = next;
    this.onChange(this.snapshot());
    return next;
  }

  /**
   * Approve the active draft into the TM, then advance to the next
   * segment. Empty drafts never reach the server.
   */
  async approve(): Promise<boolean> {
    const { source, draft } = this.activeSegment;
    if (!draft.trim()) {
      this.validationMessage = "translation must be non-empty";
      this.onChange(this.snapshot());
      return false;
    }
    try {
      const response = await this.api.approve(this.projectId, source, draft);
      this.tmSize = response.tm_size;
    } catch (error) {
      if (error instanceof ApiError && error.status === 422) {
        this.validationMessage = error.problem.message;
        this.onChange(this.snapshot());
        return false;
      }
      throw error;
    }
    if (this.activeIndex + 1 < this.segments.length) {
      await this.openSegment(this.activeIndex + 1);
    } else {
      await this.refreshPanel();
      this.onChange(this.snapshot());
    }
    return true;
  }
}
