/**
 * Composer view: free text or structured builder, the verdict of the
 * newest submission, and guidance chips that edit the draft in place.
 *
 * The builder's three columns are the request taxonomy itself; each
 * column's kind selector switches which fields a row shows.
 */

import { esc, when } from "./html.js";
import type { ComposerState } from "./state.js";
import type { IntentDoc, OutcomeDoc } from "./types.js";

const DESCRIPTOR_KINDS = ["specific", "generic", "original"] as const;
const TRANSFORMATION_KINDS = ["specific", "generic", "foundational"] as const;
const QUALIFIER_KINDS = ["purpose", "distribution", "quality"] as const;

export function renderComposer(state: ComposerState): string {
  return `
<section class="composer">
  ${when(state.networkBanner !== null, () => `
  <div class="banner error" data-role="network-banner">${esc(state.networkBanner)}</div>`)}
  <div class="mode-toggle">
    <button data-action="mode" data-mode="free_text"
      class="${state.mode === "free_text" ? "active" : ""}">Free text</button>
    <button data-action="mode" data-mode="builder"
      class="${state.mode === "builder" ? "active" : ""}">Builder</button>
  </div>
  ${state.mode === "free_text" ? renderFreeText(state) : renderBuilder(state.draft)}
  ${renderUploadSlot(state)}
  ${renderProblems(state)}
  <button data-action="submit" class="primary">Check consent</button>
  ${state.outcome === null ? "" : renderOutcome(state.outcome)}
  ${renderHistory(state)}
</section>`;
}

function renderFreeText(state: ComposerState): string {
  return `
  <textarea data-field="prompt" rows="3"
    placeholder="Create a song from 'Rolling in the Deep' with Grimes's voice">${esc(state.promptText)}</textarea>`;
}

function renderBuilder(draft: IntentDoc): string {
  return `
  <div class="builder">
    <div class="column" data-column="descriptors">
      <h3>Descriptors</h3>
      ${draft.descriptors.map((d, i) => `
      <div class="row" data-list="descriptors" data-index="${i}">
        ${kindSelect("descriptor-kind", DESCRIPTOR_KINDS, d.kind)}
        <input data-field="aspect" value="${esc(d.aspect)}" placeholder="aspect">
        ${d.kind === "specific" ? `<input data-field="name" value="${esc(d.ref?.name ?? "")}" placeholder="name">` : ""}
        ${d.kind === "generic" ? `<input data-field="category" value="${esc(d.category ?? "")}" placeholder="category">` : ""}
        ${d.kind === "original" ? `<span class="slot">${d.payload_digest ? "upload attached" : "upload needed"}</span>` : ""}
        <button data-action="remove-component">x</button>
      </div>`).join("")}
      <button data-action="add-descriptor">+ descriptor</button>
    </div>
    <div class="column" data-column="transformations">
      <h3>Transformations</h3>
      ${draft.transformations.map((t, i) => `
      <div class="row" data-list="transformations" data-index="${i}">
        ${kindSelect("transformation-kind", TRANSFORMATION_KINDS, t.kind)}
        <input data-field="aspect" value="${esc(t.aspect)}" placeholder="aspect">
        ${t.kind === "specific" ? `<input data-field="name" value="${esc(t.ref?.name ?? "")}" placeholder="name">` : ""}
        ${t.kind === "generic" ? `<input data-field="category" value="${esc(t.category ?? "")}" placeholder="category">` : ""}
        <button data-action="remove-component">x</button>
      </div>`).join("")}
      <button data-action="add-transformation">+ transformation</button>
    </div>
    <div class="column" data-column="qualifiers">
      <h3>Qualifiers</h3>
      ${draft.qualifiers.map((q, i) => `
      <div class="row" data-list="qualifiers" data-index="${i}">
        ${kindSelect("qualifier-kind", QUALIFIER_KINDS, q.kind)}
        <input data-field="key" value="${esc(q.key)}" placeholder="key">
        <input data-field="value" value="${esc(q.value)}" placeholder="value">
        <button data-action="remove-component">x</button>
      </div>`).join("")}
      <button data-action="add-qualifier">+ qualifier</button>
    </div>
  </div>`;
}

function kindSelect(name: string, kinds: readonly string[], chosen: string): string {
  return `<select data-field="${name}">${kinds
    .map((k) => `<option value="${k}" ${k === chosen ? "selected" : ""}>${k}</option>`)
    .join("")}</select>`;
}

function renderUploadSlot(state: ComposerState): string {
  return `
  <div class="upload-slot">
    <label>Your own material: <input type="file" data-field="upload"></label>
    ${state.upload === null
      ? `<span class="hint">nothing attached</span>`
      : `<span class="hint" data-role="upload-name">${esc(state.upload.name)}</span>`}
  </div>`;
}

function renderProblems(state: ComposerState): string {
  if (state.inlineProblems.length === 0) return "";
  return `
  <ul class="problems" data-role="inline-problems">
    ${state.inlineProblems.map((p) => `
    <li data-path="${esc(p.path)}"><code>${esc(p.path)}</code> ${esc(p.message)}</li>`).join("")}
  </ul>`;
}

export function renderOutcome(outcome: OutcomeDoc): string {
  const verdict = outcome.verdict;
  return `
  <div class="outcome ${verdict.overall}" data-role="outcome">
    <div class="overall">${verdict.overall === "granted" ? "Granted" : "Denied"}</div>
    ${when(outcome.grant !== null, () => `
    <div class="grant" data-role="grant-id">grant ${esc(outcome.grant?.grant_id)}</div>`)}
    <table class="entity-verdicts">
      <tbody>
      ${verdict.entity_verdicts.map((v) => `
      <tr class="entity-row ${v.outcome}" data-entity="${esc(v.name)}">
        <td>${esc(v.subject)}</td>
        <td>${esc(v.outcome)}</td>
        <td>${esc(v.reason ?? "")}</td>
      </tr>`).join("")}
      </tbody>
    </table>
    ${when(verdict.advisories.length > 0, () => `
    <ul class="advisories">${verdict.advisories.map((a) => `<li>${esc(a)}</li>`).join("")}</ul>`)}
    ${when(outcome.guidance.length > 0, () => `
    <div class="guidance" data-role="guidance">
      ${outcome.guidance.map((s, i) => `
      <button class="chip" data-action="guidance" data-guidance-index="${i}"
        title="${esc(s.text)}">${esc(chipLabel(s.suggestion_kind))}: ${esc(s.target)}</button>`).join("")}
    </div>`)}
  </div>`;
}

function chipLabel(kind: string): string {
  switch (kind) {
    case "replace_with_original":
      return "use your own recording instead";
    case "remove_reference":
      return "remove";
    case "adjust_qualifier":
      return "adjust qualifiers";
    case "reframe_generic":
      return "name an entity";
    default:
      return kind;
  }
}

function renderHistory(state: ComposerState): string {
  if (state.history.length === 0) return "";
  return `
  <details class="history">
    <summary>${state.history.length} submitted</summary>
    <ol>
      ${state.history.map((h) => `
      <li data-overall="${esc(h.overall)}">${esc(h.overall)} at ${h.evaluated_at}
        (${h.intent.descriptors.length}d/${h.intent.transformations.length}t/${h.intent.qualifiers.length}q)</li>`).join("")}
    </ol>
  </details>`;
}
