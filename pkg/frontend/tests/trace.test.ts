import { describe, expect, it } from "vitest";

import { PromptTrace } from "../src/api.js";
import { traceCopyText, traceLines } from "../src/trace.js";

const TRACE: PromptTrace = {
  text: [
    "Terms: fever = fiebre",
    "English: The patient has a fever.",
    "MT: El paciente tiene fiebre.",
    "Spanish: El paciente tiene fiebre.",
    "English: A fever today.",
    "Spanish:",
  ].join("\n"),
  expected_stop: "\n",
  slots_used: {},
};

describe("trace inspector", () => {
  it("copy text is byte-equal to the server trace", () => {
    expect(traceCopyText(TRACE)).toBe(TRACE.text);
  });

  it("classifies term, MT and cue lines without altering them", () => {
    const lines = traceLines(TRACE);
    expect(lines.map((l) => l.text).join("\n")).toBe(TRACE.text);
    expect(lines[0].kind).toBe("terms");
    expect(lines[2].kind).toBe("mt");
    expect(lines[5].kind).toBe("cue");
    expect(lines[1].kind).toBe("text");
  });
});
