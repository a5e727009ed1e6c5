/**
 * Prompt-trace inspector helpers: the displayed text must be byte-equal
 * to the server trace; highlighting is computed per line without
 * touching the text itself.
 */

import { PromptTrace } from "./api.js";

export type LineKind = "terms" | "mt" | "cue" | "text";

export interface TraceLine {
  text: string;
  kind: LineKind;
}

export function traceLines(trace: PromptTrace): TraceLine[] {
  const lines = trace.text.split("\n");
  return lines.map((text, index) => ({ text, kind: classify(text, index === lines.length - 1) }));
}

function classify(line: string, isLast: boolean): LineKind {
  if (line.startsWith("Terms: ")) return "terms";
  if (line.startsWith("MT: ")) return "mt";
  if (isLast && /^[^:]+:$/.test(line)) return "cue";
  return "text";
}

/** Exact bytes for the copy button: must round-trip the server trace. */
export function traceCopyText(trace: PromptTrace): string {
  return trace.text;
}
