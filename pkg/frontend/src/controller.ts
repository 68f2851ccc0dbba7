import { SuggestClient, ApiError } from "./client.js";
import { Debouncer } from "./debounce.js";
import type { ConsoleState, SuggestResponse } from "./types.js";
import { initialState } from "./types.js";

export interface ControllerOptions {
  client: SuggestClient;
  /** Quiet period after the last keystroke before a suggest fires. */
  debounceMs?: number;
  kGroup?: number;
  kResolver?: number;
  nSimilar?: number;
  chooser?: string;
  onChange?: (state: ConsoleState) => void;
}

/**
 * State machine of the triage console.
 *
 * Typing updates the draft and (debounced) fetches suggestions; stale
 * responses never land; a selection requires visible suggestions; an
 * assignment can only be submitted once both a group and a resolver are
 * chosen, and a failed submit keeps the selection for retry.
 */
export class ConsoleController {
  private state: ConsoleState = initialState();
  private readonly debouncer: Debouncer<string>;
  private readonly client: SuggestClient;
  private readonly opts: Required<Omit<ControllerOptions, "client" | "onChange">>;
  private readonly onChange: (state: ConsoleState) => void;
  /** Resolves each time an in-flight suggest settles; tests await it. */
  private settled: Promise<void> = Promise.resolve();

  constructor(options: ControllerOptions) {
    this.client = options.client;
    this.opts = {
      debounceMs: options.debounceMs ?? 500,
      kGroup: options.kGroup ?? 3,
      kResolver: options.kResolver ?? 5,
      nSimilar: options.nSimilar ?? 10,
      chooser: options.chooser ?? "console",
    };
    this.onChange = options.onChange ?? (() => undefined);
    this.debouncer = new Debouncer(this.opts.debounceMs, (text: string) => {
      this.settled = this.fetchSuggestions(text);
    });
  }

  getState(): ConsoleState {
    return this.state;
  }

  /** Await the most recent suggest request, if any. */
  whenSettled(): Promise<void> {
    return this.settled;
  }

  private update(patch: Partial<ConsoleState>): void {
    this.state = { ...this.state, ...patch };
    this.onChange(this.state);
  }

  /** Keystroke handler: debounce >= debounceMs after the last change. */
  handleInput(text: string): void {
    this.update({ draft: text });
    if (text.trim() === "") {
      this.debouncer.cancel();
      this.update({
        suggestions: null,
        selection: { group: null, resolver: null },
        status: { kind: "idle" },
      });
      return;
    }
    this.debouncer.trigger(text);
  }

  async fetchSuggestions(description: string): Promise<void> {
    this.update({ status: { kind: "in-flight" } });
    let response: SuggestResponse | null;
    try {
      response = await this.client.suggest({
        description,
        k_group: this.opts.kGroup,
        k_resolver: this.opts.kResolver,
        n_similar: this.opts.nSimilar,
      });
    } catch (err) {
      const reason =
        err instanceof ApiError ? err.reason : "service_unreachable";
      this.update({
        suggestions: null,
        selection: { group: null, resolver: null },
        status: { kind: "error", reason },
      });
      return;
    }
    if (response === null) {
      return; // superseded by a newer request; its handler owns the state
    }
    // fresh response wins; any previous selection points at stale rows
    this.update({
      suggestions: response,
      selection: { group: null, resolver: null },
      status: { kind: "idle" },
    });
  }

  selectGroup(name: string): void {
    if (!this.state.suggestions?.groups.some((g) => g.name === name)) {
      return;
    }
    this.update({ selection: { ...this.state.selection, group: name } });
  }

  selectResolver(name: string): void {
    if (!this.state.suggestions?.resolvers.some((r) => r.name === name)) {
      return;
    }
    this.update({ selection: { ...this.state.selection, resolver: name } });
  }

  canSubmit(): boolean {
    return (
      this.state.suggestions !== null &&
      this.state.selection.group !== null &&
      this.state.selection.resolver !== null &&
      this.state.status.kind !== "in-flight"
    );
  }

  async submitAssignment(): Promise<void> {
    const { suggestions, selection, draft } = this.state;
    if (!this.canSubmit() || suggestions === null) {
      throw new Error("submit requires a complete selection");
    }
    try {
      const ack = await this.client.recordAssignment({
        description: draft,
        suggested_groups: suggestions.groups.map((g) => g.name),
        suggested_resolvers: suggestions.resolvers.map((r) => r.name),
        chosen_group: selection.group as string,
        chosen_resolver: selection.resolver as string,
        chooser: this.opts.chooser,
      });
      this.update({
        history: [
          ...this.state.history,
          {
            seq: ack.seq,
            group: selection.group as string,
            resolver: selection.resolver as string,
            description: draft,
          },
        ],
        selection: { group: null, resolver: null },
        status: { kind: "idle" },
      });
    } catch (err) {
      const reason = err instanceof ApiError ? err.reason : "service_unreachable";
      // keep draft and selection so the router can retry
      this.update({ status: { kind: "error", reason } });
    }
  }
}
