import type { SuggestResponse } from "../src/types.js";

/** A canonical service response: 3 groups, 5 resolvers, 10 similar. */
export function fixtureResponse(): SuggestResponse {
  return {
    groups: [
      { name: "network", score: 0.81234 },
      { name: "desktop", score: 0.1 },
      { name: "database", score: 0.05 },
    ],
    resolvers: [
      { name: "alice", score: 0.4 },
      { name: "bob", score: 0.25 },
      { name: "carol", score: 0.15 },
      { name: "dave", score: 0.1 },
      { name: "erin", score: 0.05 },
    ],
    similar: Array.from({ length: 10 }, (_, i) => ({
      id: `T-${1000 + i}`,
      snippet: `similar ticket number ${i} about <vpn> & "tunnels"`,
      resolver: i % 2 === 0 ? "alice" : "bob",
      distance: 0.1 + i * 0.05,
    })),
    timings_ms: { encode: 0.2, group: 0.1, ann: 1.2, resolver: 0.4, total: 1.9 },
  };
}

export function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}
