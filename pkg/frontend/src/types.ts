/**
 * JSON document shapes exchanged with the gateway. These mirror the
 * server's serializers field for field; the console never invents its
 * own verdict or consent semantics on top of them.
 */

export type EntityType = "person" | "group" | "work" | "work_part";
export type Role = "descriptor" | "transformation";
export type Combination = "original_only" | "any" | "none";
export type QualifierKind = "quality" | "distribution" | "purpose";

export interface RefDoc {
  entity_type: EntityType;
  name: string;
  resolved_id?: string;
}

export interface DescriptorDoc {
  kind: "generic" | "specific" | "original";
  aspect: string;
  ref?: RefDoc;
  category?: string;
  payload_digest?: string;
}

export interface TransformationDoc {
  kind: "generic" | "specific" | "foundational";
  aspect: string;
  ref?: RefDoc;
  category?: string;
  rule_text?: string;
  applies_to?: string[];
}

export interface QualifierDoc {
  kind: QualifierKind;
  key: string;
  value: string;
}

export interface IntentDoc {
  version: 1;
  descriptors: DescriptorDoc[];
  transformations: TransformationDoc[];
  qualifiers: QualifierDoc[];
  raw_input?: string;
  received_at?: number;
}

// --- consent ---------------------------------------------------------------

export interface QualifierConstraintsDoc {
  purpose_allow?: string[];
  purpose_deny?: string[];
  distribution_allow?: string[];
  distribution_deny?: string[];
  quality_caps?: Record<string, number>;
}

export interface WindowDoc {
  from: number;
  until?: number;
}

export interface RuleDoc {
  aspect: string; // "any" or a concrete aspect
  roles: Role[];
  combination: Combination;
  qualifier_constraints?: QualifierConstraintsDoc;
  validity?: WindowDoc;
}

export interface ConsentRecordDoc {
  entity_id: string;
  rights_holder_id: string;
  version: number;
  status: "active" | "revoked";
  validity: WindowDoc | null;
  rules: RuleDoc[];
  updated_at: number;
  metadata?: Record<string, string>;
}

export interface EntityDoc {
  entity_id: string;
  entity_type: EntityType;
  display_name: string;
  aliases: string[];
  rights_holder_ids: string[];
  parent_entity?: string;
}

export interface ConsentViewDoc {
  entity: EntityDoc;
  consent: ConsentRecordDoc | null;
  history: { version: number; status: string; updated_at: number }[];
}

// --- verification ----------------------------------------------------------

export interface EntityVerdictDoc {
  subject: string;
  name: string;
  outcome: "permitted" | "denied";
  entity_id?: string;
  reason?: string;
  matched_rule_index?: number;
  aspect?: string;
  role?: Role;
}

export interface VerdictDoc {
  overall: "granted" | "denied";
  entity_verdicts: EntityVerdictDoc[];
  advisories: string[];
  evaluated_at: number;
}

export interface SuggestionDoc {
  target: string;
  suggestion_kind:
    | "replace_with_original"
    | "remove_reference"
    | "adjust_qualifier"
    | "reframe_generic";
  text: string;
}

export interface GrantDoc {
  grant_id: string;
  request_digest: string;
  entities: {
    entity_id: string;
    rights_holder_id: string;
    record_version: number;
    rule_index: number;
    constraints: Record<string, unknown>;
  }[];
  issued_at: number;
  compensation_eligible: string[];
}

export interface OutcomeDoc {
  verdict: VerdictDoc;
  guidance: SuggestionDoc[];
  request: IntentDoc;
  request_digest: string;
  grant: GrantDoc | null;
}

// --- reports and ledger ----------------------------------------------------

export interface QueryAuditDoc {
  query_id: string;
  entity_ids: string[];
  requester: string;
  at: number;
  results_summary: Record<string, string>;
}

export interface LedgerEntryDoc {
  seq: number;
  at: number;
  kind: string;
  payload_digest: string;
  prev_hash: string;
  entry_hash: string;
  payload_kind?: string;
  payload?: Record<string, unknown>;
}

export interface ReportDoc {
  rights_holder_id: string;
  range: { from: number | null; until: number | null };
  entities: {
    entity_id: string;
    display_name: string;
    entity_type: EntityType;
    consent: ConsentRecordDoc | null;
    history: { version: number; status: string; updated_at: number }[];
  }[];
  queries: QueryAuditDoc[];
  ledger_entries: LedgerEntryDoc[];
}

export interface ErrorBody {
  error: {
    code: string;
    message: string;
    field_path?: string;
    line?: number;
    violations?: { code: string; path: string; message: string }[];
  };
}
