/**
 * Live word-suggestion controller for one editor.
 *
 * Keystrokes are debounced (>= 150 ms) and only words of 2+ typed
 * characters issue a request. At most one autocomplete request is in
 * flight; responses carrying an id older than the newest issued request
 * are discarded, as are suggestions that no longer extend what the user
 * has typed by the time they arrive. Suggestions are advisory chips and
 * are never inserted without an explicit accept.
 */

import { AutocompleteResponse } from "./api.js";
import { Clock, Debouncer } from "./debounce.js";

export interface AutocompleteApi {
  autocomplete(
    projectId: string,
    source: string,
    typed: string,
    left: string,
    right: string,
  ): Promise<AutocompleteResponse>;
}

export interface SuggestionQuery {
  source: string;
  typed: string;
  left: string;
  right: string;
}

export interface SuggestionControllerOptions {
  debounceMs?: number;
  minTypedChars?: number;
  clock?: Clock;
  onChange?: (suggestion: string | null) => void;
}

export class SuggestionController {
  private readonly debouncer: Debouncer;
  private readonly minTypedChars: number;
  private readonly onChange: (suggestion: string | null) => void;

  private requestCounter = 0;
  private newestApplied = 0;
  private inFlight = false;
  private queued: SuggestionQuery | null = null;
  private currentTyped = "";

  suggestion: string | null = null;

  constructor(
    private readonly api: AutocompleteApi,
    private readonly projectId: string,
    options: SuggestionControllerOptions = {},
  ) {
    this.debouncer = new Debouncer(options.debounceMs ?? 150, options.clock);
    this.minTypedChars = options.minTypedChars ?? 2;
    this.onChange = options.onChange ?? (() => {});
  }

  /** Called on every keystroke with the word being typed at the caret. */
  onKeystroke(query: SuggestionQuery): void {
    this.currentTyped = query.typed;
    if (this.suggestion && !extendsTyped(this.suggestion, query.typed)) {
      this.setSuggestion(null);
    }
    if (query.typed.length < this.minTypedChars) {
      this.debouncer.cancel();
      this.queued = null;
      this.setSuggestion(null);
      return;
    }
    this.debouncer.schedule(() => this.issue(query));
  }

  /** Accept the pending suggestion (Tab); returns the word to insert. */
  accept(): string | null {
    const word = this.suggestion;
    this.setSuggestion(null);
    return word;
  }

  /** Dismiss the pending suggestion (Esc). */
  dismiss(): void {
    this.debouncer.cancel();
    this.queued = null;
    this.setSuggestion(null);
  }

  private setSuggestion(value: string | null): void {
    if (this.suggestion !== value) {
      this.suggestion = value;
      this.onChange(value);
    }
  }

  private issue(query: SuggestionQuery): void {
    if (this.inFlight) {
      // one in-flight request per editor: remember only the newest query
      this.queued = query;
      return;
    }
    const requestId = ++this.requestCounter;
    this.inFlight = true;
    this.api
      .autocomplete(this.projectId, query.source, query.typed, query.left, query.right)
      .then((response) => {
        if (requestId <= this.newestApplied) return; // stale
        this.newestApplied = requestId;
        if (
          response.word &&
          extendsTyped(response.word, query.typed) &&
          extendsTyped(response.word, this.currentTyped)
        ) {
          this.setSuggestion(response.word);
        } else {
          this.setSuggestion(null);
        }
      })
      .catch(() => {
        // network problems are non-blocking; the chip just stays away
        this.setSuggestion(null);
      })
      .finally(() => {
        this.inFlight = false;
        if (this.queued) {
          const next = this.queued;
          this.queued = null;
          this.issue(next);
        }
      });
  }
}

/** True when the candidate word extends the typed sequence (case-tolerant). */
export function extendsTyped(word: string, typed: string): boolean {
  if (!typed) return false;
  return word.startsWith(typed) || word.toLowerCase().startsWith(typed.toLowerCase());
}

/** The word fragment immediately before the caret, and where it starts. */
export function typedWordAt(text: string, caret: number): { typed: string; start: number } {
  let start = caret;
  while (start > 0 && !/\s/.test(text[start - 1])) {
    start -= 1;
  }
  return { typed: text.slice(start, caret), start };
}
