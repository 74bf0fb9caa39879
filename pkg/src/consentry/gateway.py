"""HTTP/JSON gateway over the engine, registry, and ledger.

Bodies are the canonical documents; no separate wire schema exists.
Denials are ordinary 200 responses because a denial is a verification
result, not a failure; 4xx is reserved for malformed input, missing
credentials, and missing resources, 5xx for storage trouble.
"""

from __future__ import annotations

import base64
import json
import os
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .consent import (
    ValidityWindow,
    record_to_doc,
    rule_from_doc,
)
from .engine import Engine
from .errors import (
    AliasCollision,
    AlreadyRevoked,
    ConsentryError,
    DuplicateEntityId,
    DuplicateRightsHolder,
    EmptyBatch,
    EmptyInput,
    InvalidRequest,
    MalformedDocument,
    MalformedRule,
    NotGranted,
    PreferenceSyntaxError,
    RegistryUnavailable,
    SchemaViolation,
    StorageFailure,
    Unauthorized,
    UnknownAspect,
    UnknownDirective,
    UnknownEntity,
    UnknownGrant,
    UnknownQualifierKind,
    UnknownReservationValue,
    UnknownScenario,
    UnrecognizedPattern,
)
from .ingest import (
    declarations_to_consent,
    import_ai_preferences_text,
    import_tdm_document,
)
from .ledger import LedgerStore
from .registry import ConsentRegistry, EntityRecord

_STATUS = {
    EmptyInput: 400, UnrecognizedPattern: 400, SchemaViolation: 400,
    UnknownAspect: 400, UnknownQualifierKind: 400, InvalidRequest: 400,
    MalformedDocument: 400, UnknownReservationValue: 400,
    PreferenceSyntaxError: 400, UnknownDirective: 400, EmptyBatch: 400,
    Unauthorized: 401,
    UnknownEntity: 404, UnknownGrant: 404, UnknownScenario: 404,
    DuplicateEntityId: 409, DuplicateRightsHolder: 409, AliasCollision: 409,
    AlreadyRevoked: 409, NotGranted: 409,
    MalformedRule: 422,
    RegistryUnavailable: 503,
    StorageFailure: 500,
}


@dataclass(frozen=True)
class GatewayConfig:
    listen: str = "127.0.0.1:8040"
    state_dir: str = "./consentry-state"
    registry_path: str | None = None
    ledger_path: str | None = None

    @property
    def host(self) -> str:
        return self.listen.rsplit(":", 1)[0]

    @property
    def port(self) -> int:
        return int(self.listen.rsplit(":", 1)[1])

    def resolved_registry_path(self) -> Path:
        return Path(self.registry_path or Path(self.state_dir) / "registry.jsonl")

    def resolved_ledger_path(self) -> Path:
        return Path(self.ledger_path or Path(self.state_dir) / "ledger")


def load_config(path=None, env=None) -> GatewayConfig:
    """One config file (structured text) with environment overrides."""
    env = os.environ if env is None else env
    doc = {}
    if path is not None and Path(path).exists():
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise MalformedDocument(f"config file {path}: {exc}") from None
    return GatewayConfig(
        listen=env.get("CONSENTRY_LISTEN", doc.get("listen", "127.0.0.1:8040")),
        state_dir=env.get("CONSENTRY_STATE_DIR", doc.get("state_dir", "./consentry-state")),
        registry_path=env.get("CONSENTRY_REGISTRY_PATH", doc.get("registry_path")),
        ledger_path=env.get("CONSENTRY_LEDGER_PATH", doc.get("ledger_path")),
    )


class AppState:
    def __init__(self, config: GatewayConfig):
        self.config = config
        self.ledger = LedgerStore(config.resolved_ledger_path())
        self.registry = ConsentRegistry(config.resolved_registry_path(),
                                        ledger=self.ledger)
        self.engine = Engine(self.registry, self.ledger)


def create_app(config: GatewayConfig | None = None, state: AppState | None = None,
               static_dir=None) -> FastAPI:
    if state is None:
        state = AppState(config or GatewayConfig())
    app = FastAPI(title="consentry", docs_url=None, redoc_url=None)
    app.state.consentry = state

    @app.exception_handler(ConsentryError)
    async def _domain_error(_request, exc: ConsentryError):
        body = {"code": exc.code, "message": str(exc)}
        if isinstance(exc, SchemaViolation) and exc.field_path:
            body["field_path"] = exc.field_path
        if isinstance(exc, PreferenceSyntaxError):
            body["line"] = exc.line
        if isinstance(exc, InvalidRequest):
            body["violations"] = [
                {"code": v.code, "path": v.path, "message": v.message}
                for v in exc.violations
            ]
        return JSONResponse(status_code=_STATUS.get(type(exc), 500),
                            content={"error": body})

    # --- verification -----------------------------------------------------

    @app.post("/v1/verify")
    async def verify(request: Request):
        body = await _body(request)
        prompt = body.get("prompt")
        intent = body.get("intent")
        if prompt is None and intent is None:
            raise EmptyInput("provide a prompt or an intent document")
        if prompt is not None and intent is not None:
            raise SchemaViolation("provide either prompt or intent, not both", "")
        attachment = None
        if body.get("attachment_b64") is not None:
            try:
                attachment = base64.b64decode(body["attachment_b64"], validate=True)
            except Exception:
                raise SchemaViolation("attachment_b64 is not valid base64",
                                      "attachment_b64") from None
        outcome = state.engine.verify(
            prompt=prompt, intent=intent, attachment=attachment,
            attachment_digest=body.get("attachment_digest"),
            at=_opt_int(body.get("at"), "at"),
        )
        return outcome.to_doc()

    # --- rights holders and entities --------------------------------------

    @app.post("/v1/rights-holders", status_code=201)
    async def add_rights_holder(request: Request):
        body = await _body(request)
        account = state.registry.add_rights_holder(
            body.get("rights_holder_id", ""),
            body.get("display_name", ""),
            _credential(request, body),
            at=_opt_int(body.get("at"), "at"),
        )
        return {"rights_holder_id": account.rights_holder_id,
                "display_name": account.display_name,
                "created_at": account.created_at}

    @app.post("/v1/entities", status_code=201)
    async def add_entity(request: Request):
        body = await _body(request)
        record = EntityRecord(
            entity_id=body.get("entity_id", ""),
            entity_type=body.get("entity_type", ""),
            display_name=body.get("display_name", ""),
            aliases=frozenset(body.get("aliases", ())),
            parent_entity=body.get("parent_entity"),
            rights_holder_ids=frozenset(body.get("rights_holder_ids", ())),
        )
        entity_id = state.registry.register_entity(
            record, _credential(request, body), at=_opt_int(body.get("at"), "at"))
        from .registry import entity_to_doc
        return entity_to_doc(state.registry.get_entity(entity_id))

    @app.get("/v1/entities")
    async def list_entities():
        from .registry import entity_to_doc
        return {"entities": [entity_to_doc(e) for e in state.registry.entities()]}

    # --- consent ----------------------------------------------------------

    @app.put("/v1/entities/{entity_id}/consent")
    async def put_consent(entity_id: str, request: Request):
        body = await _body(request)
        at = _opt_int(body.get("at"), "at")
        rules_doc = body.get("rules", [])
        if not isinstance(rules_doc, list):
            raise SchemaViolation("rules must be a list", "rules")
        try:
            rules = tuple(rule_from_doc(doc) for doc in rules_doc)
        except (TypeError, AttributeError, KeyError, ValueError) as exc:
            raise MalformedRule(f"unreadable rule document: {exc}") from None
        validity_doc = body.get("validity")
        if validity_doc is None:
            import time as _time
            validity = ValidityWindow(from_ts=at if at is not None else int(_time.time()))
        else:
            validity = ValidityWindow(
                from_ts=_opt_int(validity_doc.get("from"), "validity.from") or 0,
                until=_opt_int(validity_doc.get("until"), "validity.until"),
            )
        record = state.registry.upsert_consent(
            entity_id, rules, validity, _credential(request, body), at=at,
            metadata=tuple(dict(body.get("metadata", {})).items()),
        )
        return record_to_doc(record)

    @app.delete("/v1/entities/{entity_id}/consent")
    async def revoke_consent(entity_id: str, request: Request):
        record = state.registry.revoke_consent(
            entity_id, _credential(request, {}),
            at=_opt_int(request.query_params.get("at"), "at"))
        return record_to_doc(record)

    @app.get("/v1/entities/{entity_id}/consent")
    async def get_consent(entity_id: str, request: Request):
        import time as _time
        entity = state.registry.get_entity(entity_id)
        at = _opt_int(request.query_params.get("at"), "at")
        record = state.registry.lookup_consent(
            entity_id, at if at is not None else int(_time.time()))
        history = state.registry.consent_history(entity_id)
        from .registry import entity_to_doc
        return {
            "entity": entity_to_doc(entity),
            "consent": record_to_doc(record) if record is not None else None,
            "history": [
                {"version": r.version, "status": r.status, "updated_at": r.updated_at}
                for r in history
            ],
        }

    # --- reports, grants, ledger ------------------------------------------

    @app.get("/v1/reports/{rights_holder_id}")
    async def report(rights_holder_id: str, request: Request):
        params = request.query_params
        from_ts = _opt_int(params.get("from"), "from")
        until = _opt_int(params.get("until"), "until")
        if from_ts is not None and until is not None and until < from_ts:
            raise SchemaViolation("until must not precede from", "until")
        return state.registry.rights_holder_report(
            rights_holder_id, _credential(request, {}),
            from_ts=from_ts, until=until)

    @app.post("/v1/grants/{grant_id}/disseminations")
    async def dissemination(grant_id: str, request: Request):
        body = await _body(request)
        entry, payload = state.engine.register_dissemination(
            grant_id,
            platform=str(body.get("platform", "")),
            purpose=str(body.get("purpose", "")),
            at=_opt_int(body.get("at"), "at"),
        )
        return {"entry": entry.to_doc(), **payload}

    @app.get("/v1/ledger/verify")
    async def ledger_verify():
        ok, first_bad = state.ledger.verify_chain()
        return {"ok": ok, "first_bad_seq": first_bad, "entries": len(state.ledger)}

    # --- preference ingest ------------------------------------------------

    @app.post("/v1/ingest/{source_format}")
    async def ingest(source_format: str, request: Request):
        body = await _body(request)
        if source_format == "tdm":
            declarations = import_tdm_document(body.get("document", body.get("text")))
        elif source_format in ("ai-prefs", "ai_prefs"):
            text = body.get("text")
            if not isinstance(text, str):
                raise SchemaViolation("text must be a string", "text")
            declarations = import_ai_preferences_text(text)
        else:
            raise MalformedDocument(f"unknown ingest format {source_format!r}; "
                                    "use tdm or ai-prefs")
        record = declarations_to_consent(
            declarations,
            body.get("entity_id", ""),
            body.get("rights_holder_id", ""),
            state.registry,
            _credential(request, body),
            at=_opt_int(body.get("at"), "at"),
        )
        return {
            "record": record_to_doc(record),
            "declarations": [
                {"source_format": d.source_format, "scope": d.scope,
                 "directives": d.directive_map, "policy_url": d.policy_url}
                for d in declarations
            ],
        }

    if static_dir is not None and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=str(static_dir), html=True))

    return app


async def _body(request: Request) -> dict:
    raw = await request.body()
    if not raw:
        return {}
    try:
        body = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"request body is not valid JSON: {exc}", "") from None
    if not isinstance(body, dict):
        raise SchemaViolation("request body must be an object", "")
    return body


def _credential(request: Request, body: dict) -> str:
    auth = request.headers.get("authorization", "")
    if auth.lower().startswith("bearer "):
        return auth[7:].strip()
    if isinstance(body.get("credential"), str):
        return body["credential"]
    return request.query_params.get("credential", "")


def _opt_int(value, field: str) -> int | None:
    if value is None:
        return None
    try:
        return int(value)
    except (TypeError, ValueError):
        raise SchemaViolation(f"{field} must be an integer", field) from None
