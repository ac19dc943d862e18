/**
 * DOM wiring for the writing panel. All state lives in a DraftState;
 * the service is only contacted when the writer clicks "Recommend".
 */

import {
  RecommendClient,
  ServiceUnreachableError,
  type RecommendedQuote,
} from "./client.js";
import {
  hasContext,
  insertQuote,
  makeDraft,
  requestPayload,
  withBuffer,
  withCursor,
  withK,
  type DraftState,
} from "./draft.js";

const client = new RecommendClient("");
let state: DraftState = makeDraft();
const history: DraftState[] = [];

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const editor = $<HTMLTextAreaElement>("editor");
const kSlider = $<HTMLInputElement>("k-slider");
const kValue = $<HTMLSpanElement>("k-value");
const preview = $<HTMLElement>("preview");
const results = $<HTMLElement>("results");
const banner = $<HTMLElement>("banner");
const recommendBtn = $<HTMLButtonElement>("recommend");
const undoBtn = $<HTMLButtonElement>("undo");

function syncFromEditor(): void {
  state = withBuffer(state, editor.value, editor.selectionStart ?? editor.value.length);
  state = withCursor(state, editor.selectionStart ?? editor.value.length);
  renderPreview();
}

function renderPreview(): void {
  const payload = requestPayload(state);
  preview.textContent =
    `left: …${payload.left.slice(-60)}\nright: ${payload.right.slice(0, 60)}…`;
  recommendBtn.disabled = !hasContext(state);
}

function renderResults(items: RecommendedQuote[]): void {
  results.replaceChildren(
    ...items.map((item) => {
      const li = document.createElement("li");
      const score = document.createElement("span");
      score.className = "score";
      score.textContent = `#${item.rank} · ${item.score.toFixed(3)}`;
      const text = document.createElement("button");
      text.className = "quote";
      text.textContent = item.quote_text;
      text.addEventListener("click", () => {
        history.push(state);
        state = insertQuote(state, item.quote_text);
        editor.value = state.buffer;
        editor.setSelectionRange(state.cursor, state.cursor);
        results.replaceChildren();
        renderPreview();
      });
      li.append(score, text);
      return li;
    }),
  );
}

function showBanner(message: string, retry: boolean): void {
  banner.replaceChildren();
  banner.hidden = false;
  banner.append(message);
  if (retry) {
    const btn = document.createElement("button");
    btn.textContent = "Retry";
    btn.addEventListener("click", () => void requestRecommendations());
    banner.append(" ", btn);
  }
}

async function requestRecommendations(): Promise<void> {
  banner.hidden = true;
  syncFromEditor();
  try {
    const outcome = await client.recommend(requestPayload(state));
    if (outcome.kind === "stale") return;
    if (outcome.kind === "error") {
      showBanner(`Service error (${outcome.status}): ${outcome.detail}`, false);
      return;
    }
    state = { ...state, lastResponse: outcome.response };
    renderResults(outcome.response.results);
  } catch (err) {
    if (err instanceof ServiceUnreachableError) {
      showBanner("Could not reach the recommendation service.", true);
      return;
    }
    throw err;
  }
}

editor.addEventListener("input", syncFromEditor);
editor.addEventListener("selectionchange", syncFromEditor);
editor.addEventListener("click", syncFromEditor);
editor.addEventListener("keyup", syncFromEditor);

kSlider.addEventListener("input", () => {
  state = withK(state, Number(kSlider.value));
  kValue.textContent = kSlider.value;
});

recommendBtn.addEventListener("click", () => void requestRecommendations());

undoBtn.addEventListener("click", () => {
  const previous = history.pop();
  if (!previous) return;
  state = previous;
  editor.value = state.buffer;
  editor.setSelectionRange(state.cursor, state.cursor);
  results.replaceChildren();
  renderPreview();
});

void client
  .health()
  .then((h) => {
    $("status").textContent = `catalog: ${h.catalog_size} quotes`;
  })
  .catch(() => {
    $("status").textContent = "service offline";
  });

renderPreview();
