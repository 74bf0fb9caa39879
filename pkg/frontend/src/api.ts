/**
 * Thin typed client over the gateway HTTP API. Every call returns a
 * discriminated result instead of throwing, so views can render network
 * failures and domain errors without try/catch pyramids.
 */

import type {
  ConsentRecordDoc,
  ConsentViewDoc,
  ErrorBody,
  IntentDoc,
  OutcomeDoc,
  ReportDoc,
  RuleDoc,
  WindowDoc,
} from "./types.js";

export interface ApiError {
  /** HTTP status, or 0 when the request never reached the gateway. */
  status: number;
  code: string;
  message: string;
  fieldPath?: string;
  violations?: { code: string; path: string; message: string }[];
}

export type ApiResult<T> = { ok: true; value: T } | { ok: false; error: ApiError };

export interface Session {
  baseUrl: string;
  /** Bearer secret, held in memory only; never written to storage. */
  credential: string | null;
  rightsHolderId: string | null;
}

export function newSession(baseUrl: string): Session {
  return { baseUrl, credential: null, rightsHolderId: null };
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class GatewayClient {
  constructor(
    private readonly session: Session,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  async verify(body: {
    prompt?: string;
    intent?: IntentDoc;
    attachment_b64?: string;
    at?: number;
  }): Promise<ApiResult<OutcomeDoc>> {
    return this.request("POST", "/v1/verify", body, false);
  }

  async getConsent(entityId: string): Promise<ApiResult<ConsentViewDoc>> {
    return this.request("GET", `/v1/entities/${encodeURIComponent(entityId)}/consent`);
  }

  async putConsent(
    entityId: string,
    rules: RuleDoc[],
    validity: WindowDoc | null,
  ): Promise<ApiResult<ConsentRecordDoc>> {
    const body: Record<string, unknown> = { rules };
    if (validity !== null) body.validity = validity;
    return this.request(
      "PUT",
      `/v1/entities/${encodeURIComponent(entityId)}/consent`,
      body,
      true,
    );
  }

  async revokeConsent(entityId: string): Promise<ApiResult<ConsentRecordDoc>> {
    return this.request(
      "DELETE",
      `/v1/entities/${encodeURIComponent(entityId)}/consent`,
      undefined,
      true,
    );
  }

  async report(
    rightsHolderId: string,
    range?: { from?: number; until?: number },
  ): Promise<ApiResult<ReportDoc>> {
    const params = new URLSearchParams();
    if (range?.from !== undefined) params.set("from", String(range.from));
    if (range?.until !== undefined) params.set("until", String(range.until));
    const query = params.size > 0 ? `?${params}` : "";
    return this.request(
      "GET",
      `/v1/reports/${encodeURIComponent(rightsHolderId)}${query}`,
      undefined,
      true,
    );
  }

  async addRightsHolder(body: {
    rights_holder_id: string;
    display_name: string;
  }): Promise<ApiResult<{ rights_holder_id: string }>> {
    return this.request("POST", "/v1/rights-holders", body, true);
  }

  async addEntity(body: {
    entity_id: string;
    entity_type: string;
    display_name: string;
    aliases?: string[];
    parent_entity?: string;
    rights_holder_ids: string[];
  }): Promise<ApiResult<Record<string, unknown>>> {
    return this.request("POST", "/v1/entities", body, true);
  }

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
    authenticated = false,
  ): Promise<ApiResult<T>> {
    const headers: Record<string, string> = {};
    if (body !== undefined) headers["Content-Type"] = "application/json";
    if (authenticated) {
      if (!this.session.credential) {
        return {
          ok: false,
          error: { status: 401, code: "Unauthorized", message: "sign in first" },
        };
      }
      headers["Authorization"] = `Bearer ${this.session.credential}`;
    }
    let response: Response;
    try {
      response = await this.fetchImpl(this.session.baseUrl + path, {
        method,
        headers,
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (cause) {
      return {
        ok: false,
        error: {
          status: 0,
          code: "NetworkFailure",
          message: cause instanceof Error ? cause.message : "gateway unreachable",
        },
      };
    }
    if (!response.ok) {
      return { ok: false, error: await toApiError(response) };
    }
    return { ok: true, value: (await response.json()) as T };
  }
}

async function toApiError(response: Response): Promise<ApiError> {
  let parsed: ErrorBody | null = null;
  try {
    parsed = (await response.json()) as ErrorBody;
  } catch {
    // non-JSON error body; fall through to the status line
  }
  if (parsed && typeof parsed.error === "object") {
    return {
      status: response.status,
      code: parsed.error.code ?? "Unknown",
      message: parsed.error.message ?? response.statusText,
      fieldPath: parsed.error.field_path,
      violations: parsed.error.violations,
    };
  }
  return {
    status: response.status,
    code: "Unknown",
    message: `${response.status} ${response.statusText}`,
  };
}
