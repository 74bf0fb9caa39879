/**
 * Console state and transitions, kept pure for testing. Views own no
 * logic: they render these states and dispatch these transitions.
 *
 * Two invariants are enforced here rather than in the views:
 *  - a consent draft that fails client-side rule validation is never
 *    handed to the gateway;
 *  - the verdict on screen always belongs to the newest submission,
 *    even when responses resolve out of order.
 */

import type { GatewayClient, ApiError } from "./api.js";
import type {
  ConsentRecordDoc,
  ConsentViewDoc,
  IntentDoc,
  OutcomeDoc,
  RuleDoc,
  SuggestionDoc,
  WindowDoc,
} from "./types.js";
import { validateIntentDraft, validateRules, validateWindow, type Problem } from "./validation.js";

// --- consent editor ---------------------------------------------------------

export interface EditorState {
  entityId: string | null;
  entityName: string;
  status: "none" | "active" | "revoked";
  draftRules: RuleDoc[];
  draftValidity: WindowDoc | null;
  dirty: boolean;
  /** Consent version last seen from the server; null before any record. */
  lastServerVersion: number | null;
  problems: Problem[];
  /** Set when a save found the server ahead; the view shows a reload prompt. */
  conflict: boolean;
}

export function emptyEditor(): EditorState {
  return {
    entityId: null,
    entityName: "",
    status: "none",
    draftRules: [],
    draftValidity: null,
    dirty: false,
    lastServerVersion: null,
    problems: [],
    conflict: false,
  };
}

export function editorFromView(view: ConsentViewDoc): EditorState {
  const record = view.consent;
  return {
    entityId: view.entity.entity_id,
    entityName: view.entity.display_name,
    status: record === null ? "none" : record.status,
    draftRules: record === null ? [] : structuredClone(record.rules),
    draftValidity: record === null ? null : structuredClone(record.validity),
    dirty: false,
    lastServerVersion: record === null ? null : record.version,
    problems: [],
    conflict: false,
  };
}

export function editorReadOnly(state: EditorState): boolean {
  return state.status === "revoked";
}

function withDraft(state: EditorState, rules: RuleDoc[], validity: WindowDoc | null): EditorState {
  return {
    ...state,
    draftRules: rules,
    draftValidity: validity,
    dirty: true,
    problems: [...validateRules(rules), ...validateWindow(validity)],
  };
}

export function addRule(state: EditorState, rule: RuleDoc): EditorState {
  return withDraft(state, [...state.draftRules, rule], state.draftValidity);
}

export function updateRule(state: EditorState, index: number, rule: RuleDoc): EditorState {
  const rules = state.draftRules.map((r, i) => (i === index ? rule : r));
  return withDraft(state, rules, state.draftValidity);
}

export function removeRule(state: EditorState, index: number): EditorState {
  const rules = state.draftRules.filter((_, i) => i !== index);
  return withDraft(state, rules, state.draftValidity);
}

export function setValidity(state: EditorState, validity: WindowDoc | null): EditorState {
  return withDraft(state, state.draftRules, validity);
}

export type SaveResult =
  | { kind: "saved"; record: ConsentRecordDoc }
  | { kind: "invalid"; problems: Problem[] }
  | { kind: "conflict"; serverVersion: number | null }
  | { kind: "error"; error: ApiError };

/**
 * Optimistic save with a server version check: re-reads the record and
 * refuses to overwrite a version this editor has not seen.
 */
export async function saveConsent(
  client: GatewayClient,
  state: EditorState,
): Promise<SaveResult> {
  const problems = [...validateRules(state.draftRules), ...validateWindow(state.draftValidity)];
  if (problems.length > 0) return { kind: "invalid", problems };
  if (state.entityId === null) {
    return {
      kind: "error",
      error: { status: 0, code: "NoEntity", message: "no entity selected" },
    };
  }

  const current = await client.getConsent(state.entityId);
  if (!current.ok) return { kind: "error", error: current.error };
  const serverVersion = current.value.consent === null ? null : current.value.consent.version;
  if (serverVersion !== state.lastServerVersion) {
    return { kind: "conflict", serverVersion };
  }

  const put = await client.putConsent(state.entityId, state.draftRules, state.draftValidity);
  if (!put.ok) return { kind: "error", error: put.error };
  return { kind: "saved", record: put.value };
}

export function applySaved(state: EditorState, record: ConsentRecordDoc): EditorState {
  return {
    ...state,
    status: record.status,
    draftRules: structuredClone(record.rules),
    draftValidity: structuredClone(record.validity),
    dirty: false,
    lastServerVersion: record.version,
    problems: [],
    conflict: false,
  };
}

export function applyConflict(state: EditorState): EditorState {
  return { ...state, conflict: true };
}

// --- intent composer --------------------------------------------------------

export type ComposerMode = "free_text" | "builder";

export interface Upload {
  name: string;
  b64: string;
  /** sha256 hex of the bytes, filled in by the upload handler. */
  digest: string;
}

export interface ComposerState {
  mode: ComposerMode;
  promptText: string;
  draft: IntentDoc;
  upload: Upload | null;
  outcome: OutcomeDoc | null;
  /** Sequence number of the newest submission sent. */
  submissionSeq: number;
  /** Sequence number the displayed outcome belongs to. */
  displayedSeq: number;
  inlineProblems: Problem[];
  networkBanner: string | null;
  history: { intent: IntentDoc; overall: string; evaluated_at: number }[];
}

export function emptyDraft(): IntentDoc {
  return { version: 1, descriptors: [], transformations: [], qualifiers: [] };
}

export function emptyComposer(): ComposerState {
  return {
    mode: "free_text",
    promptText: "",
    draft: emptyDraft(),
    upload: null,
    outcome: null,
    submissionSeq: 0,
    displayedSeq: 0,
    inlineProblems: [],
    networkBanner: null,
    history: [],
  };
}

/** Fill upload digests into original descriptors that still lack one. */
export function withUploadDigests(draft: IntentDoc, upload: Upload | null): IntentDoc {
  if (upload === null) return draft;
  return {
    ...draft,
    descriptors: draft.descriptors.map((d) =>
      d.kind === "original" && !d.payload_digest
        ? { ...d, payload_digest: upload.digest }
        : d,
    ),
  };
}

export type SubmitOutcome =
  | { kind: "blocked"; state: ComposerState } // inline problems, nothing sent
  | { kind: "submitted"; state: ComposerState; seq: number };

/**
 * Validate and, when clean, send the current draft. The caller applies
 * the response with applyOutcome/applyFailure using the returned seq.
 */
export async function submitIntent(
  client: GatewayClient,
  state: ComposerState,
): Promise<SubmitOutcome & { result?: Awaited<ReturnType<GatewayClient["verify"]>> }> {
  if (state.mode === "free_text") {
    if (!state.promptText.trim()) {
      return {
        kind: "blocked",
        state: {
          ...state,
          inlineProblems: [{ path: "prompt", message: "prompt is empty" }],
        },
      };
    }
    const seq = state.submissionSeq + 1;
    const sent = { ...state, submissionSeq: seq, inlineProblems: [], networkBanner: null };
    const body: { prompt: string; attachment_b64?: string } = { prompt: state.promptText };
    if (state.upload !== null) body.attachment_b64 = state.upload.b64;
    const result = await client.verify(body);
    return { kind: "submitted", state: sent, seq, result };
  }

  const draft = withUploadDigests(state.draft, state.upload);
  const problems = validateIntentDraft(draft);
  if (problems.length > 0) {
    return { kind: "blocked", state: { ...state, draft, inlineProblems: problems } };
  }
  const seq = state.submissionSeq + 1;
  const sent = { ...state, draft, submissionSeq: seq, inlineProblems: [], networkBanner: null };
  const result = await client.verify({ intent: draft });
  return { kind: "submitted", state: sent, seq, result };
}

/** Accept a verify response; stale responses are dropped unseen. */
export function applyOutcome(
  state: ComposerState,
  seq: number,
  outcome: OutcomeDoc,
): ComposerState {
  if (seq !== state.submissionSeq || seq <= state.displayedSeq) return state;
  return {
    ...state,
    outcome,
    displayedSeq: seq,
    networkBanner: null,
    history: [
      ...state.history,
      {
        intent: outcome.request,
        overall: outcome.verdict.overall,
        evaluated_at: outcome.verdict.evaluated_at,
      },
    ],
  };
}

export function applyFailure(
  state: ComposerState,
  seq: number,
  error: ApiError,
): ComposerState {
  if (seq !== state.submissionSeq) return state;
  if (error.status === 0) {
    return { ...state, networkBanner: error.message };
  }
  if (error.violations && error.violations.length > 0) {
    return {
      ...state,
      inlineProblems: error.violations.map((v) => ({ path: v.path, message: v.message })),
    };
  }
  const path = error.fieldPath ?? "";
  return { ...state, inlineProblems: [{ path, message: error.message }] };
}

// --- guidance actions -------------------------------------------------------

/**
 * Apply a clicked guidance chip to the draft. When the last submission
 * was free text, the parsed request echoed by the gateway becomes the
 * draft first, so the chip edits exactly what was judged.
 */
export function applyGuidance(
  state: ComposerState,
  suggestion: SuggestionDoc,
): ComposerState {
  let draft = state.mode === "builder" || state.outcome === null
    ? state.draft
    : structuredClone(state.outcome.request);
  draft = mutateDraft(draft, suggestion, state);
  const next: ComposerState = {
    ...state,
    mode: "builder",
    draft,
    inlineProblems: validateIntentDraft(withUploadDigests(draft, state.upload)),
  };
  return next;
}

function mutateDraft(
  draft: IntentDoc,
  suggestion: SuggestionDoc,
  state: ComposerState,
): IntentDoc {
  switch (suggestion.suggestion_kind) {
    case "replace_with_original": {
      // swap the named material for an upload slot, keeping its aspect
      const digest = state.upload?.digest;
      return {
        ...draft,
        descriptors: draft.descriptors.map((d) =>
          d.kind !== "original" && componentNamed(d, suggestion.target)
            ? { kind: "original", aspect: d.aspect, payload_digest: digest }
            : d,
        ),
      };
    }
    case "remove_reference": {
      const entityIds = new Set(
        (state.outcome?.verdict.entity_verdicts ?? [])
          .filter((v) => v.name === suggestion.target && v.entity_id !== undefined)
          .map((v) => v.entity_id as string),
      );
      const keep = (c: { ref?: { name: string; resolved_id?: string } }) =>
        !componentNamed(c, suggestion.target) &&
        !(c.ref?.resolved_id !== undefined && entityIds.has(c.ref.resolved_id));
      return {
        ...draft,
        descriptors: draft.descriptors.filter(keep),
        transformations: draft.transformations.filter(keep),
      };
    }
    case "adjust_qualifier":
      // the server text names the offending constraint; dropping the
      // qualifiers yields the widest request the user can re-narrow
      return { ...draft, qualifiers: [] };
    case "reframe_generic":
      return {
        ...draft,
        descriptors: draft.descriptors.map((d) =>
          d.kind === "generic" && d.category === suggestion.target
            ? { kind: "specific", aspect: d.aspect, ref: { entity_type: "work", name: "" } }
            : d,
        ),
        transformations: draft.transformations.map((t) =>
          t.kind === "generic" && t.category === suggestion.target
            ? { kind: "specific", aspect: t.aspect, ref: { entity_type: "person", name: "" } }
            : t,
        ),
      };
  }
}

function componentNamed(
  component: { ref?: { name: string }; category?: string },
  target: string,
): boolean {
  return component.ref?.name === target || component.category === target;
}
