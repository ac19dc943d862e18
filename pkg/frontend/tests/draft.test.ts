import { describe, expect, it } from "vitest";

import {
  WINDOW_WORDS,
  contextAt,
  hasContext,
  insertQuote,
  makeDraft,
  requestPayload,
  truncateWords,
  withCursor,
  withK,
} from "../src/draft.js";

describe("cursor handling", () => {
  it("clamps the cursor into the buffer", () => {
    const draft = makeDraft("hello", 99);
    expect(draft.cursor).toBe(5);
    expect(withCursor(draft, -3).cursor).toBe(0);
  });

  it("splits the buffer at the cursor", () => {
    const draft = makeDraft("before after", 7);
    expect(contextAt(draft)).toEqual({ left: "before ", right: "after" });
  });

  it("cursor at the end gives an empty right side", () => {
    const draft = makeDraft("all on the left");
    expect(contextAt(draft).right).toBe("");
  });
});

describe("window truncation", () => {
  it("keeps short text as-is", () => {
    expect(truncateWords("a b c", "left", 5)).toBe("a b c");
  });

  it("keeps the last words of the left side", () => {
    expect(truncateWords("one two three four", "left", 2)).toBe("three four");
  });

  it("keeps the first words of the right side", () => {
    expect(truncateWords("one two three four", "right", 2)).toBe("one two");
  });

  it("payload truncates both sides to the dataset window", () => {
    const words = Array.from({ length: 100 }, (_, i) => `w${i}`);
    const draft = makeDraft(words.join(" ") + " | " + words.join(" "),
      words.join(" ").length + 2);
    const payload = requestPayload(draft);
    expect(payload.left.split(" ")).toHaveLength(WINDOW_WORDS);
    expect(payload.right.split(" ")).toHaveLength(WINDOW_WORDS);
    expect(payload.left.split(" ").pop()).toBe("|");
    expect(payload.right.split(" ")[0]).toBe("w0");
  });

  it("payload carries the selected k", () => {
    expect(requestPayload(withK(makeDraft("text"), 10)).k).toBe(10);
  });
});

describe("insertQuote", () => {
  it("wraps the quote in quotation marks at the cursor", () => {
    const draft = makeDraft("He said and left.", 8);
    const next = insertQuote(draft, "time is money");
    expect(next.buffer).toBe("He said “time is money” and left.");
  });

  it("insert into empty right side ends the buffer with the quote", () => {
    const next = insertQuote(makeDraft("She wrote: "), "carpe diem");
    expect(next.buffer).toBe("She wrote: “carpe diem”");
    expect(next.cursor).toBe(next.buffer.length);
  });

  it("moves the cursor past the insertion and clears results", () => {
    const draft = {
      ...makeDraft("left right", 5),
      lastResponse: { results: [], model_fingerprint: "x", latency_ms: 1 },
    };
    const next = insertQuote(draft, "q");
    expect(next.buffer.slice(0, next.cursor)).toBe("left “q”");
    expect(next.lastResponse).toBeNull();
  });

  it("insert then undo restores the original state", () => {
    const draft = makeDraft("a draft", 3);
    const history = [draft];
    insertQuote(draft, "quoted words");
    expect(history.pop()).toEqual(draft);
    expect(draft.buffer).toBe("a draft");
  });
});

describe("hasContext", () => {
  it("is false for a blank draft", () => {
    expect(hasContext(makeDraft("   "))).toBe(false);
  });

  it("is true with text on either side", () => {
    expect(hasContext(makeDraft("words", 0))).toBe(true);
    expect(hasContext(makeDraft("words"))).toBe(true);
  });
});
