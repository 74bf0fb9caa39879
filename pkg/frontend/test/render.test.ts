import { describe, expect, it } from "vitest";

import { esc } from "../src/html.js";
import { renderEditor } from "../src/consentEditor.js";
import { renderOutcome } from "../src/intentComposer.js";
import { renderReport } from "../src/report.js";
import { applySaved, editorFromView } from "../src/state.js";
import type { ConsentViewDoc, OutcomeDoc, ReportDoc } from "../src/types.js";

const deniedOutcome: OutcomeDoc = {
  verdict: {
    overall: "denied",
    entity_verdicts: [
      {
        subject: "whole of Rolling in the Deep",
        name: "Rolling in the Deep",
        outcome: "denied",
        reason: "not_in_registry",
      },
      {
        subject: "voice of Grimes",
        name: "Grimes",
        outcome: "denied",
        entity_id: "grimes",
        reason: "role_not_permitted",
      },
    ],
    advisories: [],
    evaluated_at: 1700000060,
  },
  guidance: [
    {
      target: "Rolling in the Deep",
      suggestion_kind: "replace_with_original",
      text: "replace the referenced material with an upload of yours",
    },
  ],
  request: { version: 1, descriptors: [], transformations: [], qualifiers: [] },
  request_digest: "d".repeat(64),
  grant: null,
};

describe("verdict view", () => {
  it("renders one row per entity with its reason", () => {
    const markup = renderOutcome(deniedOutcome);
    const rows = markup.match(/class="entity-row/g) ?? [];
    expect(rows).toHaveLength(2);
    expect(markup).toContain("not_in_registry");
    expect(markup).toContain("role_not_permitted");
    expect(markup).toContain("Denied");
  });

  it("offers the own-recording action as a clickable chip", () => {
    const markup = renderOutcome(deniedOutcome);
    expect(markup).toContain('data-action="guidance"');
    expect(markup).toContain("use your own recording instead");
  });

  it("shows the grant id when granted", () => {
    const granted: OutcomeDoc = {
      ...deniedOutcome,
      verdict: { ...deniedOutcome.verdict, overall: "granted", entity_verdicts: [] },
      guidance: [],
      grant: {
        grant_id: "1b2e4d6c",
        request_digest: "d".repeat(64),
        entities: [],
        issued_at: 1700000060,
        compensation_eligible: ["rh-grimes"],
      },
    };
    const markup = renderOutcome(granted);
    expect(markup).toContain("grant 1b2e4d6c");
    expect(markup).toContain("Granted");
  });
});

const view: ConsentViewDoc = {
  entity: {
    entity_id: "grimes",
    entity_type: "person",
    display_name: "Grimes",
    aliases: ["grimes"],
    rights_holder_ids: ["rh-grimes"],
  },
  consent: {
    entity_id: "grimes",
    rights_holder_id: "rh-grimes",
    version: 1,
    status: "active",
    validity: { from: 0 },
    rules: [{ aspect: "voice", roles: ["descriptor"], combination: "original_only" }],
    updated_at: 0,
  },
  history: [{ version: 1, status: "active", updated_at: 0 }],
};

describe("consent editor view", () => {
  it("shows the server version as a badge", () => {
    const markup = renderEditor(editorFromView(view));
    expect(markup).toContain('data-role="version-badge"');
    expect(markup).toContain(">v1<");
  });

  it("renders revoked records read-only without a save button", () => {
    let state = editorFromView(view);
    state = applySaved(state, { ...view.consent!, version: 2, status: "revoked" });
    const markup = renderEditor(state);
    expect(markup).toContain('data-readonly="true"');
    expect(markup).toContain('data-role="revoked-note"');
    expect(markup).not.toContain('data-action="save"');
  });

  it("prompts for a reload on a version conflict", () => {
    const state = { ...editorFromView(view), conflict: true };
    const markup = renderEditor(state);
    expect(markup).toContain('data-role="conflict-prompt"');
    expect(markup).toContain('data-action="reload"');
  });

  it("explains that an empty rule list reserves the entity", () => {
    const state = { ...editorFromView(view), draftRules: [] };
    expect(renderEditor(state)).toContain("explicitly reserved");
  });
});

describe("report view", () => {
  const reportDoc: ReportDoc = {
    rights_holder_id: "rh-grimes",
    range: { from: null, until: null },
    entities: [
      {
        entity_id: "grimes",
        display_name: "Grimes",
        entity_type: "person",
        consent: view.consent,
        history: [{ version: 1, status: "active", updated_at: 0 }],
      },
    ],
    queries: [
      {
        query_id: "q-1",
        entity_ids: ["grimes"],
        requester: "optin_agent",
        at: 1700000060,
        results_summary: { grimes: "found" },
      },
    ],
    ledger_entries: [
      {
        seq: 1,
        at: 1700000060,
        kind: "verification",
        payload_digest: "e".repeat(64),
        prev_hash: "0".repeat(64),
        entry_hash: "f".repeat(64),
      },
    ],
  };

  it("renders one query row and one ledger row from the scenario fixture", () => {
    const markup = renderReport(reportDoc, null);
    expect(markup.match(/class="query-row"/g)).toHaveLength(1);
    expect(markup.match(/class="ledger-row"/g)).toHaveLength(1);
    expect(markup).toContain("verification");
  });

  it("shows an empty state when the range saw nothing", () => {
    const markup = renderReport(
      { ...reportDoc, queries: [], ledger_entries: [] },
      null,
    );
    expect(markup).toContain('data-role="empty-state"');
  });

  it("renders an auth error view on a bad credential", () => {
    const markup = renderReport(null, {
      status: 401,
      code: "Unauthorized",
      message: "unknown credential",
    });
    expect(markup).toContain('data-role="auth-error"');
    expect(markup).toContain("sign in again");
  });
});

describe("escaping", () => {
  it("neutralizes markup in server-supplied names", () => {
    expect(esc('<script>alert("x")</script>')).not.toContain("<script>");
    const hostile: OutcomeDoc = {
      ...deniedOutcome,
      verdict: {
        ...deniedOutcome.verdict,
        entity_verdicts: [
          {
            subject: "<img src=x onerror=alert(1)>",
            name: "<b>G</b>",
            outcome: "denied",
            reason: "not_in_registry",
          },
        ],
      },
      guidance: [],
    };
    const markup = renderOutcome(hostile);
    expect(markup).not.toContain("<img");
    expect(markup).not.toContain("<b>G</b>");
  });
});
