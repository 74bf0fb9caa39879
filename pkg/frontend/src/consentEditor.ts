/**
 * Consent editor view: rule rows with aspect/role/combination/qualifier
 * pickers, validity pickers, a version badge, and save/revoke. Renders
 * read-only once the record is revoked.
 */

import { esc, timestamp, when } from "./html.js";
import { editorReadOnly, type EditorState } from "./state.js";
import { COMBINATIONS, CORE_ASPECTS, ROLES } from "./validation.js";
import type { RuleDoc } from "./types.js";

export function renderEditor(state: EditorState): string {
  if (state.entityId === null) {
    return `
<section class="editor">
  <form data-role="load-entity">
    <input data-field="entity-id" placeholder="entity id">
    <button data-action="load">Load</button>
  </form>
</section>`;
  }
  const readOnly = editorReadOnly(state);
  return `
<section class="editor" data-entity="${esc(state.entityId)}" ${readOnly ? 'data-readonly="true"' : ""}>
  <header>
    <h2>${esc(state.entityName)}</h2>
    <span class="badge" data-role="version-badge">${
      state.lastServerVersion === null ? "no record" : `v${state.lastServerVersion}`
    }</span>
    <span class="status ${esc(state.status)}">${esc(state.status)}</span>
    ${when(state.dirty, () => `<span class="dirty" data-role="dirty">unsaved</span>`)}
  </header>
  ${when(state.conflict, () => `
  <div class="banner conflict" data-role="conflict-prompt">
    Someone saved a newer version of this record. Reload before editing further.
    <button data-action="reload">Reload</button>
  </div>`)}
  ${when(readOnly, () => `
  <div class="banner" data-role="revoked-note">Consent is revoked; the record is read-only.</div>`)}
  <div class="rules">
    ${state.draftRules.map((rule, i) => renderRuleRow(rule, i, readOnly)).join("")}
    ${when(!readOnly, () => `<button data-action="add-rule">+ rule</button>`)}
    ${when(state.draftRules.length === 0, () => `
    <p class="hint">No rules: every request for this entity is denied as explicitly reserved.</p>`)}
  </div>
  <div class="validity">
    <label>valid from <input data-field="valid-from" type="number"
      value="${state.draftValidity?.from ?? ""}" ${readOnly ? "disabled" : ""}></label>
    <label>until <input data-field="valid-until" type="number"
      value="${state.draftValidity?.until ?? ""}" ${readOnly ? "disabled" : ""}></label>
  </div>
  ${when(state.problems.length > 0, () => `
  <ul class="problems" data-role="rule-problems">
    ${state.problems.map((p) => `<li><code>${esc(p.path)}</code> ${esc(p.message)}</li>`).join("")}
  </ul>`)}
  ${when(!readOnly, () => `
  <div class="actions">
    <button data-action="save" class="primary" ${state.problems.length > 0 ? "disabled" : ""}>Save</button>
    <button data-action="revoke" class="danger">Revoke consent</button>
  </div>`)}
</section>`;
}

function renderRuleRow(rule: RuleDoc, index: number, readOnly: boolean): string {
  const disabled = readOnly ? "disabled" : "";
  const constraints = rule.qualifier_constraints ?? {};
  return `
  <div class="rule" data-rule-index="${index}">
    <select data-field="aspect" ${disabled}>
      ${["any", ...CORE_ASPECTS].map((a) => `
      <option value="${a}" ${a === rule.aspect ? "selected" : ""}>${a}</option>`).join("")}
    </select>
    ${ROLES.map((role) => `
    <label><input type="checkbox" data-field="role" value="${role}"
      ${rule.roles.includes(role) ? "checked" : ""} ${disabled}>${role}</label>`).join("")}
    <select data-field="combination" ${disabled}>
      ${COMBINATIONS.map((c) => `
      <option value="${c}" ${c === rule.combination ? "selected" : ""}>${c}</option>`).join("")}
    </select>
    <input data-field="purpose-allow" placeholder="purposes allowed"
      value="${esc((constraints.purpose_allow ?? []).join(", "))}" ${disabled}>
    <input data-field="distribution-deny" placeholder="platforms denied"
      value="${esc((constraints.distribution_deny ?? []).join(", "))}" ${disabled}>
    ${when(rule.validity !== undefined, () => `
    <span class="rule-window">[${timestamp(rule.validity!.from)}, ${
      rule.validity!.until === undefined ? "open" : timestamp(rule.validity!.until)
    })</span>`)}
    ${when(!readOnly, () => `<button data-action="remove-rule">x</button>`)}
  </div>`;
}
