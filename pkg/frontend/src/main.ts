/**
 * Workbench entry point: binds the controllers to the page. The server
 * base URL comes from the ?api= query parameter (default same origin
 * port 8000).
 */

import { ApiClient } from "./api.js";
import { EditorController } from "./editor.js";
import { SuggestionController, typedWordAt } from "./suggestion.js";
import { traceCopyText, traceLines } from "./trace.js";

const DEMO_SEGMENTS = [
  { source: "The patient has a severe fever." },
  { source: "The patient needs a vaccine dose." },
  { source: "Wash your hands regularly." },
];

const DEMO_TM = [
  { source: "The patient has a mild fever.", target: "El paciente tiene fiebre leve." },
  {
    source: "The patient reports severe fever and cough.",
    target: "El paciente refiere fiebre intensa y tos.",
  },
  { source: "Wash your hands regularly.", target: "Lávese las manos con regularidad." },
];

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const baseUrl = params.get("api") ?? `${window.location.protocol}//${window.location.hostname}:8000`;
  const api = new ApiClient(baseUrl);

  const project = await api.createProject("workbench-demo", "en", "es");
  await api.uploadUnits(project.id, DEMO_TM);
  await api.rebuildIndex(project.id);

  const draftBox = el<HTMLTextAreaElement>("draft");
  const chip = el<HTMLSpanElement>("suggestion-chip");
  const segmentList = el<HTMLUListElement>("segments");
  const fuzzyList = el<HTMLUListElement>("fuzzy-panel");
  const termList = el<HTMLUListElement>("term-chips");
  const tmSizeBadge = el<HTMLSpanElement>("tm-size");
  const validation = el<HTMLSpanElement>("validation");
  const tracePre = el<HTMLPreElement>("trace");
  const copyButton = el<HTMLButtonElement>("copy-trace");
  const approveButton = el<HTMLButtonElement>("approve");
  const mtLine = el<HTMLDivElement>("mt-line");

  const editor = new EditorController(api, project.id, DEMO_SEGMENTS, {
    onChange: render,
  });
  const suggester = new SuggestionController(api, project.id, {
    onChange: () => {
      editor.suggestion = suggester.suggestion;
      render();
    },
  });

  function render(): void {
    const snap = editor.snapshot();
    tmSizeBadge.textContent = String(snap.tmSize);
    validation.textContent = snap.validationMessage ?? "";
    mtLine.textContent = snap.machineTranslation ? `MT: ${snap.machineTranslation}` : "";
    chip.textContent = suggester.suggestion ?? "";
    chip.style.display = suggester.suggestion ? "inline-block" : "none";

    segmentList.replaceChildren(
      ...editor.segments.map((segment, index) => {
        const item = document.createElement("li");
        item.textContent = segment.source;
        item.className = index === snap.activeIndex ? "active" : "";
        item.onclick = () => void editor.openSegment(index);
        return item;
      }),
    );
    fuzzyList.replaceChildren(
      ...snap.fuzzyPanel.map((match) => {
        const item = document.createElement("li");
        item.textContent = `${match.similarity.toFixed(3)}  ${match.source} → ${match.target}`;
        return item;
      }),
    );
    termList.replaceChildren(
      ...snap.termChips.map((chipInfo) => {
        const item = document.createElement("li");
        item.textContent = `${chipInfo.sourceTerm} = ${chipInfo.targetTerm}`;
        item.className = chipInfo.used ? "used" : "unused";
        return item;
      }),
    );
    if (snap.trace) {
      tracePre.style.display = "block";
      tracePre.replaceChildren(
        ...traceLines(snap.trace).map((line) => {
          const span = document.createElement("span");
          span.textContent = line.text + "\n";
          span.className = `trace-${line.kind}`;
          return span;
        }),
      );
    } else {
      tracePre.style.display = "none";
    }
  }

  draftBox.addEventListener("input", () => {
    editor.setDraft(draftBox.value);
    const caret = draftBox.selectionStart ?? draftBox.value.length;
    const { typed } = typedWordAt(draftBox.value, caret);
    suggester.onKeystroke({
      source: editor.activeSegment.source,
      typed,
      left: draftBox.value.slice(0, caret - typed.length).trimEnd(),
      right: draftBox.value.slice(caret).trimStart(),
    });
  });

  draftBox.addEventListener("keydown", (event) => {
    if (event.key === "Tab" && suggester.suggestion) {
      event.preventDefault();
      const word = suggester.accept();
      if (word) {
        const caret = draftBox.selectionStart ?? draftBox.value.length;
        const { start } = typedWordAt(draftBox.value, caret);
        draftBox.value = editor.insertWord(word, caret, start);
        const position = start + word.length;
        draftBox.setSelectionRange(position, position);
      }
    } else if (event.key === "Escape") {
      suggester.dismiss();
    }
  });

  approveButton.addEventListener("click", () => {
    void editor.approve().then((approved) => {
      if (approved) draftBox.value = editor.activeSegment.draft;
    });
  });
  copyButton.addEventListener("click", () => {
    const snap = editor.snapshot();
    if (snap.trace) void navigator.clipboard.writeText(traceCopyText(snap.trace));
  });

  await editor.openSegment(0);
  render();
}

void boot();
