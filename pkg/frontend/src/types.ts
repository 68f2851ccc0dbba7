/** Wire types of the suggestion service (see the service's v1 endpoints). */

export interface ScoredName {
  name: string;
  score: number;
}

export interface SimilarTicket {
  id: string;
  snippet: string;
  resolver: string;
  distance: number;
}

export interface SuggestResponse {
  groups: ScoredName[];
  resolvers: ScoredName[];
  similar: SimilarTicket[];
  timings_ms: Record<string, number>;
}

export interface SuggestRequest {
  description: string;
  k_group?: number;
  k_resolver?: number;
  n_similar?: number;
}

export interface AssignmentRequest {
  description: string;
  suggested_groups: string[];
  suggested_resolvers: string[];
  chosen_group: string;
  chosen_resolver: string;
  chooser: string;
}

export interface AssignmentAck {
  seq: number;
}

export type RequestStatus =
  | { kind: "idle" }
  | { kind: "in-flight" }
  | { kind: "error"; reason: string };

export interface Selection {
  group: string | null;
  resolver: string | null;
}

export interface ConfirmedAssignment {
  seq: number;
  group: string;
  resolver: string;
  description: string;
}

/** Everything the console knows; the view is a pure function of this. */
export interface ConsoleState {
  draft: string;
  suggestions: SuggestResponse | null;
  selection: Selection;
  status: RequestStatus;
  history: ConfirmedAssignment[];
}

export function initialState(): ConsoleState {
  return {
    draft: "",
    suggestions: null,
    selection: { group: null, resolver: null },
    status: { kind: "idle" },
    history: [],
  };
}
