/**
 * Draft-buffer state for the writing panel.
 *
 * The draft is a plain text buffer plus a cursor marking the quote
 * slot. Everything here is pure: operations return new states, so undo
 * is just holding on to the previous state.
 */

import type { RecommendResponse } from "./client.js";

/** Word window sent to the service, matching the mined dataset contexts. */
export const WINDOW_WORDS = 40;

export interface DraftState {
  buffer: string;
  /** Code-unit offset of the quote slot; always within [0, buffer.length]. */
  cursor: number;
  k: number;
  lastResponse: RecommendResponse | null;
}

export function makeDraft(buffer = "", cursor = buffer.length, k = 5): DraftState {
  return { buffer, cursor: clampCursor(buffer, cursor), k, lastResponse: null };
}

export function clampCursor(buffer: string, cursor: number): number {
  return Math.max(0, Math.min(buffer.length, cursor));
}

export function withCursor(state: DraftState, cursor: number): DraftState {
  return { ...state, cursor: clampCursor(state.buffer, cursor) };
}

export function withBuffer(state: DraftState, buffer: string, cursor: number): DraftState {
  return { ...state, buffer, cursor: clampCursor(buffer, cursor) };
}

export function withK(state: DraftState, k: number): DraftState {
  return { ...state, k: Math.max(1, Math.floor(k)) };
}

/** The untruncated text on each side of the quote slot. */
export function contextAt(state: DraftState): { left: string; right: string } {
  return {
    left: state.buffer.slice(0, state.cursor),
    right: state.buffer.slice(state.cursor),
  };
}

/** Keep the last (left side) or first (right side) `maxWords` words. */
export function truncateWords(
  text: string,
  side: "left" | "right",
  maxWords = WINDOW_WORDS,
): string {
  const words = text.split(/\s+/).filter((w) => w.length > 0);
  if (words.length <= maxWords) {
    return text.trim();
  }
  const kept = side === "left" ? words.slice(-maxWords) : words.slice(0, maxWords);
  return kept.join(" ");
}

/** The exact payload for POST /api/recommend: window-truncated context plus k. */
export function requestPayload(state: DraftState): {
  left: string;
  right: string;
  k: number;
} {
  const { left, right } = contextAt(state);
  return {
    left: truncateWords(left, "left"),
    right: truncateWords(right, "right"),
    k: state.k,
  };
}

export function hasContext(state: DraftState): boolean {
  const { left, right } = contextAt(state);
  return left.trim().length > 0 || right.trim().length > 0;
}

/**
 * Insert a quote at the cursor, wrapped in quotation marks. The cursor
 * moves past the insertion and the recommendation list is cleared.
 */
export function insertQuote(state: DraftState, quoteText: string): DraftState {
  const { left, right } = contextAt(state);
  const needsSpaceBefore = left.length > 0 && !/\s$/.test(left);
  const needsSpaceAfter = right.length > 0 && !/^\s/.test(right);
  const inserted =
    (needsSpaceBefore ? " " : "") + `“${quoteText}”` + (needsSpaceAfter ? " " : "");
  return {
    ...state,
    buffer: left + inserted + right,
    cursor: left.length + inserted.length - (needsSpaceAfter ? 1 : 0),
    lastResponse: null,
  };
}
