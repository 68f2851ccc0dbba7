/**
 * Trailing-edge debouncer: the wrapped call fires once the caller has been
 * quiet for `delayMs`.  A burst of triggers inside the window collapses to
 * a single call with the latest argument.
 */
export class Debouncer<T> {
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly delayMs: number,
    private readonly fn: (value: T) => void,
  ) {}

  trigger(value: T): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
    }
    this.timer = setTimeout(() => {
      this.timer = null;
      this.fn(value);
    }, this.delayMs);
  }

  /** Drop any pending call (e.g. when the input empties). */
  cancel(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
  }
}
