import type {
  AssignmentAck,
  AssignmentRequest,
  SuggestRequest,
  SuggestResponse,
} from "./types.js";

export type FetchLike = (
  url: string,
  init: RequestInit,
) => Promise<Response>;

/** Raised for non-2xx answers; carries the machine-readable reason. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly reason: string,
  ) {
    super(`${status}: ${reason}`);
  }
}

async function errorReason(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { error?: string };
    return body.error ?? `http_${response.status}`;
  } catch {
    return `http_${response.status}`;
  }
}

/**
 * Thin typed client for the suggestion service.  Suggest calls carry a
 * request id; `suggest` resolves to null for responses that were
 * superseded by a newer request, so stale answers can never overwrite
 * fresh state.  At most one suggest request is in flight: starting a new
 * one aborts its predecessor.
 */
export class SuggestClient {
  private requestCounter = 0;
  private inflight: AbortController | null = null;

  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  async suggest(request: SuggestRequest): Promise<SuggestResponse | null> {
    const id = ++this.requestCounter;
    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;
    let response: Response;
    try {
      response = await this.fetchFn(`${this.baseUrl}/v1/suggest`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(request),
        signal: controller.signal,
      });
    } catch (err) {
      if (controller.signal.aborted) {
        return null; // superseded mid-flight
      }
      throw err;
    }
    if (id !== this.requestCounter) {
      return null; // a newer request went out while this one was airborne
    }
    if (!response.ok) {
      throw new ApiError(response.status, await errorReason(response));
    }
    return (await response.json()) as SuggestResponse;
  }

  async recordAssignment(request: AssignmentRequest): Promise<AssignmentAck> {
    const response = await this.fetchFn(`${this.baseUrl}/v1/assignments`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(request),
    });
    if (!response.ok) {
      throw new ApiError(response.status, await errorReason(response));
    }
    return (await response.json()) as AssignmentAck;
  }
}
