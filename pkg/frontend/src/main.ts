/**
 * App shell: session, tabs, and DOM wiring. Views re-render whole
 * sections from state; edits are read back on change events. All logic
 * lives in state.ts and validation.ts; this file only shuttles.
 *
 * The credential is kept on the session object in memory and nowhere
 * else: no cookies, no storage, gone on refresh by design.
 */

import { GatewayClient, newSession, type ApiError } from "./api.js";
import { renderComposer } from "./intentComposer.js";
import { renderEditor } from "./consentEditor.js";
import { renderReport } from "./report.js";
import {
  applyConflict,
  applyFailure,
  applyOutcome,
  applySaved,
  editorFromView,
  emptyComposer,
  emptyDraft,
  emptyEditor,
  saveConsent,
  submitIntent,
  applyGuidance,
  type ComposerState,
  type EditorState,
} from "./state.js";
import type { IntentDoc, ReportDoc, RuleDoc } from "./types.js";

const session = newSession("");
const client = new GatewayClient(session);

let composer: ComposerState = emptyComposer();
let editor: EditorState = emptyEditor();
let report: ReportDoc | null = null;
let reportError: ApiError | null = null;
let tab: "composer" | "editor" | "report" = "composer";

function $(selector: string): HTMLElement {
  const el = document.querySelector(selector);
  if (!(el instanceof HTMLElement)) throw new Error(`missing ${selector}`);
  return el;
}

function render(): void {
  for (const button of document.querySelectorAll<HTMLElement>("[data-tab]")) {
    button.classList.toggle("active", button.dataset.tab === tab);
  }
  const signedIn = session.credential !== null;
  $("#signin").style.display = signedIn ? "none" : "";
  $("#whoami").textContent = signedIn ? `signed in as ${session.rightsHolderId}` : "";
  const view = $("#view");
  if (tab === "composer") view.innerHTML = renderComposer(composer);
  else if (tab === "editor") view.innerHTML = renderEditor(editor);
  else view.innerHTML = renderReport(report, reportError);
}

// --- composer wiring --------------------------------------------------------

async function handleSubmit(): Promise<void> {
  const sent = await submitIntent(client, composer);
  composer = sent.state;
  if (sent.kind === "submitted" && sent.result) {
    composer = sent.result.ok
      ? applyOutcome(composer, sent.seq, sent.result.value)
      : applyFailure(composer, sent.seq, sent.result.error);
  }
  render();
}

async function handleUpload(input: HTMLInputElement): Promise<void> {
  const file = input.files?.[0];
  if (!file) return;
  const bytes = new Uint8Array(await file.arrayBuffer());
  const digestBytes = new Uint8Array(await crypto.subtle.digest("SHA-256", bytes));
  const digest = [...digestBytes].map((b) => b.toString(16).padStart(2, "0")).join("");
  let binary = "";
  for (const b of bytes) binary += String.fromCharCode(b);
  composer = { ...composer, upload: { name: file.name, b64: btoa(binary), digest } };
  render();
}

function readBuilderDraft(root: HTMLElement): IntentDoc {
  const draft = emptyDraft();
  for (const row of root.querySelectorAll<HTMLElement>('[data-list="descriptors"]')) {
    const kind = fieldValue(row, "descriptor-kind") as "specific" | "generic" | "original";
    const aspect = fieldValue(row, "aspect") || "whole";
    if (kind === "specific") {
      draft.descriptors.push({
        kind,
        aspect,
        ref: { entity_type: "work", name: fieldValue(row, "name") },
      });
    } else if (kind === "generic") {
      draft.descriptors.push({ kind, aspect, category: fieldValue(row, "category") });
    } else {
      const previous = composer.draft.descriptors[Number(row.dataset.index)];
      draft.descriptors.push({
        kind,
        aspect,
        payload_digest: previous?.kind === "original" ? previous.payload_digest : undefined,
      });
    }
  }
  for (const row of root.querySelectorAll<HTMLElement>('[data-list="transformations"]')) {
    const kind = fieldValue(row, "transformation-kind") as
      | "specific"
      | "generic"
      | "foundational";
    const aspect = fieldValue(row, "aspect") || "style";
    if (kind === "specific") {
      draft.transformations.push({
        kind,
        aspect,
        ref: { entity_type: "person", name: fieldValue(row, "name") },
      });
    } else if (kind === "generic") {
      draft.transformations.push({ kind, aspect, category: fieldValue(row, "category") });
    } else {
      draft.transformations.push({ kind, aspect });
    }
  }
  for (const row of root.querySelectorAll<HTMLElement>('[data-list="qualifiers"]')) {
    const kind = fieldValue(row, "qualifier-kind") as "purpose" | "distribution" | "quality";
    draft.qualifiers.push({
      kind,
      key: fieldValue(row, "key") || defaultKey(kind),
      value: fieldValue(row, "value"),
    });
  }
  return draft;
}

function defaultKey(kind: string): string {
  if (kind === "purpose") return "purpose";
  if (kind === "distribution") return "platform";
  return "resolution";
}

function fieldValue(row: HTMLElement, field: string): string {
  const el = row.querySelector<HTMLInputElement | HTMLSelectElement>(
    `[data-field="${field}"]`,
  );
  return el ? el.value.trim() : "";
}

// --- editor wiring ----------------------------------------------------------

async function loadEntity(entityId: string): Promise<void> {
  const view = await client.getConsent(entityId);
  if (view.ok) {
    editor = editorFromView(view.value);
  } else {
    alert(`${view.error.code}: ${view.error.message}`);
  }
  render();
}

function readRules(root: HTMLElement): RuleDoc[] {
  const rules: RuleDoc[] = [];
  for (const row of root.querySelectorAll<HTMLElement>("[data-rule-index]")) {
    const roles = [...row.querySelectorAll<HTMLInputElement>('[data-field="role"]:checked')]
      .map((el) => el.value) as RuleDoc["roles"];
    const rule: RuleDoc = {
      aspect: fieldValue(row, "aspect") || "any",
      roles,
      combination: (fieldValue(row, "combination") || "any") as RuleDoc["combination"],
    };
    const allow = listField(row, "purpose-allow");
    const deny = listField(row, "distribution-deny");
    if (allow.length > 0 || deny.length > 0) {
      rule.qualifier_constraints = {};
      if (allow.length > 0) rule.qualifier_constraints.purpose_allow = allow;
      if (deny.length > 0) rule.qualifier_constraints.distribution_deny = deny;
    }
    const index = Number(row.getAttribute("data-rule-index"));
    const previous = editor.draftRules[index];
    if (previous?.validity !== undefined) rule.validity = previous.validity;
    rules.push(rule);
  }
  return rules;
}

function listField(row: HTMLElement, field: string): string[] {
  return fieldValue(row, field)
    .split(",")
    .map((s) => s.trim())
    .filter((s) => s.length > 0);
}

async function handleSave(): Promise<void> {
  const result = await saveConsent(client, editor);
  if (result.kind === "saved") {
    editor = applySaved(editor, result.record);
  } else if (result.kind === "conflict") {
    editor = applyConflict(editor);
  } else if (result.kind === "invalid") {
    editor = { ...editor, problems: result.problems };
  } else if (result.error.status === 401) {
    session.credential = null;
    alert("credential rejected; sign in again");
  } else {
    alert(`${result.error.code}: ${result.error.message}`);
  }
  render();
}

async function handleRevoke(): Promise<void> {
  if (editor.entityId === null) return;
  if (!confirm("Revoke consent? Every future request will be denied.")) return;
  const result = await client.revokeConsent(editor.entityId);
  if (result.ok) {
    editor = applySaved(editor, result.value);
  } else if (result.error.status === 401) {
    session.credential = null;
    alert("credential rejected; sign in again");
  } else {
    alert(`${result.error.code}: ${result.error.message}`);
  }
  render();
}

// --- report wiring ----------------------------------------------------------

async function loadReport(from?: number, until?: number): Promise<void> {
  if (session.rightsHolderId === null) {
    reportError = { status: 401, code: "Unauthorized", message: "sign in first" };
    render();
    return;
  }
  const range: { from?: number; until?: number } = {};
  if (from !== undefined) range.from = from;
  if (until !== undefined) range.until = until;
  const result = await client.report(session.rightsHolderId, range);
  report = result.ok ? result.value : null;
  reportError = result.ok ? null : result.error;
  render();
}

// --- event delegation -------------------------------------------------------

function setup(): void {
  $("#signin").addEventListener("submit", (event) => {
    event.preventDefault();
    const form = event.target as HTMLFormElement;
    const holder = (form.elements.namedItem("holder") as HTMLInputElement).value.trim();
    const credential = (form.elements.namedItem("credential") as HTMLInputElement).value;
    session.rightsHolderId = holder || null;
    session.credential = credential || null;
    render();
  });

  for (const button of document.querySelectorAll<HTMLElement>("[data-tab]")) {
    button.addEventListener("click", () => {
      tab = button.dataset.tab as typeof tab;
      render();
    });
  }

  const view = $("#view");

  view.addEventListener("click", (event) => {
    const target = (event.target as HTMLElement).closest<HTMLElement>("[data-action]");
    if (!target) return;
    const action = target.dataset.action;
    if (action === "mode") {
      composer = { ...composer, mode: target.dataset.mode as ComposerState["mode"] };
      render();
    } else if (action === "submit") {
      void handleSubmit();
    } else if (action === "guidance") {
      const suggestion = composer.outcome?.guidance[Number(target.dataset.guidanceIndex)];
      if (suggestion) {
        composer = applyGuidance(composer, suggestion);
        render();
      }
    } else if (action === "add-descriptor") {
      composer.draft.descriptors.push({ kind: "specific", aspect: "whole", ref: { entity_type: "work", name: "" } });
      render();
    } else if (action === "add-transformation") {
      composer.draft.transformations.push({ kind: "specific", aspect: "voice", ref: { entity_type: "person", name: "" } });
      render();
    } else if (action === "add-qualifier") {
      composer.draft.qualifiers.push({ kind: "purpose", key: "purpose", value: "" });
      render();
    } else if (action === "remove-component") {
      const row = target.closest<HTMLElement>("[data-list]");
      if (row) {
        const list = row.dataset.list as keyof Pick<IntentDoc, "descriptors" | "transformations" | "qualifiers">;
        composer.draft[list].splice(Number(row.dataset.index), 1);
        render();
      }
    } else if (action === "load") {
      event.preventDefault();
      const input = view.querySelector<HTMLInputElement>('[data-field="entity-id"]');
      if (input && input.value.trim()) void loadEntity(input.value.trim());
    } else if (action === "add-rule") {
      editor = {
        ...editor,
        draftRules: [
          ...editor.draftRules,
          { aspect: "any", roles: ["descriptor"], combination: "original_only" },
        ],
        dirty: true,
      };
      render();
    } else if (action === "remove-rule") {
      const row = target.closest<HTMLElement>("[data-rule-index]");
      if (row) {
        const index = Number(row.getAttribute("data-rule-index"));
        editor = {
          ...editor,
          draftRules: editor.draftRules.filter((_, i) => i !== index),
          dirty: true,
        };
        render();
      }
    } else if (action === "save") {
      void handleSave();
    } else if (action === "revoke") {
      void handleRevoke();
    } else if (action === "reload") {
      if (editor.entityId !== null) void loadEntity(editor.entityId);
    } else if (action === "load-report") {
      event.preventDefault();
      const from = view.querySelector<HTMLInputElement>('[data-field="report-from"]')?.value;
      const until = view.querySelector<HTMLInputElement>('[data-field="report-until"]')?.value;
      void loadReport(
        from ? Number(from) : undefined,
        until ? Number(until) : undefined,
      );
    }
  });

  view.addEventListener("change", (event) => {
    const el = event.target as HTMLElement;
    if (el.matches('[data-field="upload"]')) {
      void handleUpload(el as HTMLInputElement);
      return;
    }
    if (el.matches('[data-field="prompt"]')) {
      composer = { ...composer, promptText: (el as HTMLTextAreaElement).value };
      return;
    }
    const builder = el.closest<HTMLElement>(".builder");
    if (builder) {
      composer = { ...composer, draft: readBuilderDraft(builder) };
      return;
    }
    const rules = el.closest<HTMLElement>(".editor");
    if (rules) {
      const from = rules.querySelector<HTMLInputElement>('[data-field="valid-from"]')?.value;
      const until = rules.querySelector<HTMLInputElement>('[data-field="valid-until"]')?.value;
      editor = {
        ...editor,
        draftRules: readRules(rules),
        draftValidity: from
          ? { from: Number(from), ...(until ? { until: Number(until) } : {}) }
          : editor.draftValidity,
        dirty: true,
      };
    }
  });

  render();
}

document.addEventListener("DOMContentLoaded", setup);
