import type { ConsoleState, ScoredName, SimilarTicket } from "./types.js";

/** Escape text for safe interpolation into HTML. */
export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

function scoredRow(
  kind: "group" | "resolver",
  item: ScoredName,
  selected: boolean,
): string {
  const pct = Math.round(Math.min(Math.max(item.score, 0), 1) * 100);
  return (
    `<li class="row${selected ? " selected" : ""}" ` +
    `data-kind="${kind}" data-name="${escapeHtml(item.name)}">` +
    `<span class="name">${escapeHtml(item.name)}</span>` +
    `<span class="bar"><span class="fill" style="width:${pct}%"></span></span>` +
    `<span class="score">${item.score.toFixed(3)}</span>` +
    `</li>`
  );
}

function similarRow(item: SimilarTicket): string {
  return (
    `<li class="row similar" data-kind="similar" data-id="${escapeHtml(item.id)}">` +
    `<span class="ticket-id">${escapeHtml(item.id)}</span>` +
    `<span class="snippet">${escapeHtml(item.snippet)}</span>` +
    `<span class="resolver">${escapeHtml(item.resolver)}</span>` +
    `<span class="distance">${item.distance.toFixed(3)}</span>` +
    `</li>`
  );
}

/**
 * Render the suggestion panels as HTML.  A pure function of the state:
 * the same state always yields the same markup.
 */
export function renderPanels(state: ConsoleState): string {
  if (state.status.kind === "error") {
    return `<p class="error" data-reason="${escapeHtml(state.status.reason)}">` +
      `${escapeHtml(describeError(state.status.reason))}</p>`;
  }
  if (state.suggestions === null) {
    return state.status.kind === "in-flight"
      ? `<p class="pending">fetching suggestions&hellip;</p>`
      : `<p class="hint">Type a ticket description to see suggestions.</p>`;
  }
  const s = state.suggestions;
  const groups = s.groups
    .map((g) => scoredRow("group", g, state.selection.group === g.name))
    .join("");
  const resolvers = s.resolvers
    .map((r) => scoredRow("resolver", r, state.selection.resolver === r.name))
    .join("");
  const similar = s.similar.map(similarRow).join("");
  const stale = state.status.kind === "in-flight" ? " stale" : "";
  return (
    `<div class="panels${stale}">` +
    `<section class="panel groups"><h2>Groups</h2><ul>${groups}</ul></section>` +
    `<section class="panel resolvers"><h2>Resolvers</h2><ul>${resolvers}</ul></section>` +
    `<section class="panel similar"><h2>Similar tickets</h2><ul>${similar}</ul></section>` +
    `</div>`
  );
}

export function renderHistory(state: ConsoleState): string {
  if (state.history.length === 0) {
    return "";
  }
  const rows = state.history
    .map(
      (h) =>
        `<li data-seq="${h.seq}">#${h.seq} &rarr; ` +
        `${escapeHtml(h.group)} / ${escapeHtml(h.resolver)}</li>`,
    )
    .join("");
  return `<section class="history"><h2>Confirmed this session</h2><ul>${rows}</ul></section>`;
}

function describeError(reason: string): string {
  switch (reason) {
    case "empty_after_cleaning":
      return "That description has no usable words yet - keep typing.";
    case "service_unreachable":
      return "The suggestion service is unreachable. Retry in a moment.";
    default:
      return `The service answered with an error (${reason}).`;
  }
}
