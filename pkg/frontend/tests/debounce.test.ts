import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { Debouncer } from "../src/debounce.js";

describe("Debouncer", () => {
  beforeEach(() => {
    vi.useFakeTimers();
  });

  afterEach(() => {
    vi.useRealTimers();
  });

  it("collapses a typing burst into one trailing call", () => {
    const calls: string[] = [];
    const debouncer = new Debouncer<string>(500, (v) => calls.push(v));
    // ten keystrokes, 40ms apart: all inside one 500ms quiet window
    for (let i = 1; i <= 10; i++) {
      debouncer.trigger("x".repeat(i));
      vi.advanceTimersByTime(40);
    }
    expect(calls).toHaveLength(0);
    vi.advanceTimersByTime(500);
    expect(calls).toEqual(["x".repeat(10)]);
  });

  it("fires only after the quiet period, not before", () => {
    const calls: string[] = [];
    const debouncer = new Debouncer<string>(500, (v) => calls.push(v));
    debouncer.trigger("a");
    vi.advanceTimersByTime(499);
    expect(calls).toHaveLength(0);
    vi.advanceTimersByTime(1);
    expect(calls).toEqual(["a"]);
  });

  it("separate bursts produce separate calls", () => {
    const calls: string[] = [];
    const debouncer = new Debouncer<string>(500, (v) => calls.push(v));
    debouncer.trigger("first");
    vi.advanceTimersByTime(500);
    debouncer.trigger("second");
    vi.advanceTimersByTime(500);
    expect(calls).toEqual(["first", "second"]);
  });

  it("cancel drops the pending call", () => {
    const calls: string[] = [];
    const debouncer = new Debouncer<string>(500, (v) => calls.push(v));
    debouncer.trigger("doomed");
    debouncer.cancel();
    vi.advanceTimersByTime(1000);
    expect(calls).toHaveLength(0);
  });
});
