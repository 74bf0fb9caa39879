/**
 * Transparency report view: who queried the holder's entities and when,
 * the matching ledger entries, and each entity's consent timeline.
 */

import { esc, timestamp, when } from "./html.js";
import type { ApiError } from "./api.js";
import type { ReportDoc } from "./types.js";

export function renderReport(report: ReportDoc | null, error: ApiError | null): string {
  if (error !== null) {
    if (error.status === 401 || error.status === 403) {
      return `
<section class="report">
  <div class="banner error" data-role="auth-error">
    Not authorized: ${esc(error.message)}. Check the credential and sign in again.
  </div>
</section>`;
    }
    return `
<section class="report">
  <div class="banner error">${esc(error.code)}: ${esc(error.message)}</div>
</section>`;
  }
  if (report === null) {
    return `
<section class="report">
  <form data-role="report-range">
    <label>from <input data-field="report-from" type="number"></label>
    <label>until <input data-field="report-until" type="number"></label>
    <button data-action="load-report">Load report</button>
  </form>
</section>`;
  }
  const empty =
    report.queries.length === 0 && report.ledger_entries.length === 0;
  return `
<section class="report" data-holder="${esc(report.rights_holder_id)}">
  <h2>Report for ${esc(report.rights_holder_id)}</h2>
  <p class="range">range: ${report.range.from ?? "open"} to ${report.range.until ?? "open"}</p>
  ${when(empty, () => `
  <p class="empty" data-role="empty-state">Nothing touched your catalog in this range.</p>`)}
  ${when(report.queries.length > 0, () => `
  <h3>Queries</h3>
  <table class="queries"><tbody>
    ${report.queries.map((q) => `
    <tr class="query-row" data-query="${esc(q.query_id)}">
      <td>${timestamp(q.at)}</td>
      <td>${esc(q.requester)}</td>
      <td>${esc(Object.entries(q.results_summary).map(([k, v]) => `${k}: ${v}`).join(", "))}</td>
    </tr>`).join("")}
  </tbody></table>`)}
  ${when(report.ledger_entries.length > 0, () => `
  <h3>Ledger</h3>
  <table class="ledger"><tbody>
    ${report.ledger_entries.map((e) => `
    <tr class="ledger-row" data-kind="${esc(e.kind)}">
      <td>#${e.seq}</td>
      <td>${timestamp(e.at)}</td>
      <td>${esc(e.kind)}</td>
      <td><code>${esc(e.payload_digest.slice(0, 12))}</code></td>
    </tr>`).join("")}
  </tbody></table>`)}
  ${when(report.entities.length > 0, () => `
  <h3>Consent timeline</h3>
  ${report.entities.map((entity) => `
  <div class="timeline" data-entity="${esc(entity.entity_id)}">
    <h4>${esc(entity.display_name)} <small>${esc(entity.entity_type)}</small></h4>
    ${entity.history.length === 0
      ? `<p class="hint">never had a consent record</p>`
      : `<ol>${entity.history.map((h) => `
        <li>v${h.version} ${esc(h.status)} at ${timestamp(h.updated_at)}</li>`).join("")}</ol>`}
  </div>`).join("")}`)}
</section>`;
}
