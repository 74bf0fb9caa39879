"""Event-sourced consent registry.

State lives in one newline-delimited event log; an in-memory index is
rebuilt by replaying it on open. Commands validate against the index,
append one event, then apply it, so replay and live execution share the
same application code path.

Authorization is bearer-secret based: accounts store only credential
digests, and every mutation must present a secret matching one of the
target entity's rights holders. Queries are open, but each batch query
leaves an audit entry that rights holders can read back in their
transparency reports.
"""

from __future__ import annotations

import os
import re
import json
import threading
import time
import uuid
from dataclasses import dataclass
from pathlib import Path

from .canonical import canonical_json, normalize_entity_name, sha256_hex
from .consent import (
    ConsentRecord,
    record_from_doc,
    record_to_doc,
    rule_from_doc,
    rule_to_doc,
    validate_rules,
    validate_window,
    ValidityWindow,
    window_from_doc,
    window_to_doc,
)
from .errors import (
    AliasCollision,
    AlreadyRevoked,
    DuplicateEntityId,
    DuplicateRightsHolder,
    EmptyBatch,
    MalformedRule,
    SchemaViolation,
    StorageFailure,
    Unauthorized,
    UnknownEntity,
)
from .intent import ENTITY_TYPES

OPTIN_AGENT = "optin_agent"

_SLUG = re.compile(r"^[a-z0-9][a-z0-9._\-]*$")


@dataclass(frozen=True)
class EntityRecord:
    entity_id: str
    entity_type: str
    display_name: str
    aliases: frozenset = frozenset()
    parent_entity: str | None = None
    rights_holder_ids: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "aliases",
                           frozenset(normalize_entity_name(a) for a in self.aliases))
        object.__setattr__(self, "rights_holder_ids",
                           frozenset(str(h) for h in self.rights_holder_ids))


@dataclass(frozen=True)
class RightsHolderAccount:
    rights_holder_id: str
    display_name: str
    credential_digest: str
    created_at: int


@dataclass(frozen=True)
class QueryAuditEntry:
    query_id: str
    entity_ids: tuple[str, ...]
    requester: str
    at: int
    results_summary: tuple[tuple[str, str], ...]   # (entity_id, found|not_found|reserved)

    def to_doc(self) -> dict:
        return {
            "query_id": self.query_id,
            "entity_ids": list(self.entity_ids),
            "requester": self.requester,
            "at": self.at,
            "results_summary": {k: v for k, v in self.results_summary},
        }


def entity_to_doc(entity: EntityRecord) -> dict:
    doc = {
        "entity_id": entity.entity_id,
        "entity_type": entity.entity_type,
        "display_name": entity.display_name,
        "aliases": sorted(entity.aliases),
        "rights_holder_ids": sorted(entity.rights_holder_ids),
    }
    if entity.parent_entity is not None:
        doc["parent_entity"] = entity.parent_entity
    return doc


def entity_from_doc(doc) -> EntityRecord:
    return EntityRecord(
        entity_id=doc["entity_id"],
        entity_type=doc["entity_type"],
        display_name=doc["display_name"],
        aliases=frozenset(doc.get("aliases", ())),
        parent_entity=doc.get("parent_entity"),
        rights_holder_ids=frozenset(doc.get("rights_holder_ids", ())),
    )


class ConsentRegistry:
    """Registry over one event-log file; optionally wired to a ledger so
    consent changes also land in the tamper-evident chain."""

    def __init__(self, path, ledger=None):
        self.path = Path(path)
        self.ledger = ledger
        self._lock = threading.RLock()
        self._holders: dict[str, RightsHolderAccount] = {}
        self._entities: dict[str, EntityRecord] = {}
        self._aliases: dict[str, str] = {}
        self._versions: dict[str, list[ConsentRecord]] = {}
        self._audits: list[QueryAuditEntry] = []
        self._seq = 0
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            if self.path.exists():
                self._replay()
        except OSError as exc:
            raise StorageFailure(f"cannot open registry at {self.path}: {exc}") from exc

    # --- event plumbing ---------------------------------------------------

    def _replay(self):
        for raw in self.path.read_text(encoding="utf-8").splitlines():
            if not raw.strip():
                continue
            try:
                event = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise StorageFailure(f"registry event log damaged: {exc}") from exc
            self._apply(event["kind"], event["payload"])
            self._seq = event["seq"] + 1

    def _commit(self, kind: str, payload: dict, at: int):
        event = {"seq": self._seq, "kind": kind, "at": at, "payload": payload}
        try:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(canonical_json(event) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
        except OSError as exc:
            raise StorageFailure(f"registry append failed: {exc}") from exc
        self._seq += 1
        self._apply(kind, payload)

    def _apply(self, kind: str, payload: dict):
        if kind == "holder_created":
            account = RightsHolderAccount(
                rights_holder_id=payload["rights_holder_id"],
                display_name=payload["display_name"],
                credential_digest=payload["credential_digest"],
                created_at=payload["created_at"],
            )
            self._holders[account.rights_holder_id] = account
        elif kind == "entity_registered":
            entity = entity_from_doc(payload)
            self._entities[entity.entity_id] = entity
            for alias in entity.aliases:
                self._aliases[alias] = entity.entity_id
        elif kind in ("consent_upserted", "consent_revoked"):
            record = record_from_doc(payload)
            self._versions.setdefault(record.entity_id, []).append(record)
        elif kind == "query_executed":
            self._audits.append(QueryAuditEntry(
                query_id=payload["query_id"],
                entity_ids=tuple(payload["entity_ids"]),
                requester=payload["requester"],
                at=payload["at"],
                results_summary=tuple(sorted(payload["results_summary"].items())),
            ))
        else:
            raise StorageFailure(f"unknown registry event kind {kind!r}")

    # --- rights holder accounts -------------------------------------------

    def add_rights_holder(self, rights_holder_id: str, display_name: str,
                          credential: str, at: int | None = None) -> RightsHolderAccount:
        if not _SLUG.match(rights_holder_id or ""):
            raise SchemaViolation("rights_holder_id must be a lowercase slug",
                                  "rights_holder_id")
        if not credential:
            raise SchemaViolation("credential secret must be non-empty", "credential")
        at = _ts(at)
        with self._lock:
            if rights_holder_id in self._holders:
                raise DuplicateRightsHolder(rights_holder_id)
            payload = {
                "rights_holder_id": rights_holder_id,
                "display_name": display_name or rights_holder_id,
                "credential_digest": sha256_hex(credential.encode("utf-8")),
                "created_at": at,
            }
            self._commit("holder_created", payload, at)
            return self._holders[rights_holder_id]

    def identify_holder(self, credential: str) -> str | None:
        digest = sha256_hex((credential or "").encode("utf-8"))
        for account in self._holders.values():
            if account.credential_digest == digest:
                return account.rights_holder_id
        return None

    def _authorize(self, credential: str, allowed: frozenset | set) -> str:
        holder = self.identify_holder(credential or "")
        if holder is None or holder not in allowed:
            raise Unauthorized("credential does not match an authorized rights holder")
        return holder

    # --- entities ---------------------------------------------------------

    def register_entity(self, record: EntityRecord, credential: str,
                        at: int | None = None) -> str:
        _check_entity(record)
        at = _ts(at)
        with self._lock:
            for holder_id in record.rights_holder_ids:
                if holder_id not in self._holders:
                    raise Unauthorized(f"unknown rights holder {holder_id!r}")
            self._authorize(credential, record.rights_holder_ids)
            if record.entity_id in self._entities:
                raise DuplicateEntityId(record.entity_id)
            if record.parent_entity is not None and record.parent_entity not in self._entities:
                raise UnknownEntity(f"parent entity {record.parent_entity!r} not registered")
            aliases = set(record.aliases) | {normalize_entity_name(record.display_name)}
            aliases.discard("")
            for alias in aliases:
                owner = self._aliases.get(alias)
                if owner is not None and owner != record.entity_id:
                    raise AliasCollision(f"alias {alias!r} already resolves to {owner!r}")
            payload = entity_to_doc(EntityRecord(
                entity_id=record.entity_id,
                entity_type=record.entity_type,
                display_name=record.display_name,
                aliases=frozenset(aliases),
                parent_entity=record.parent_entity,
                rights_holder_ids=record.rights_holder_ids,
            ))
            self._commit("entity_registered", payload, at)
            return record.entity_id

    def get_entity(self, entity_id: str) -> EntityRecord:
        entity = self._entities.get(entity_id)
        if entity is None:
            raise UnknownEntity(entity_id)
        return entity

    def resolve_alias(self, name: str) -> str | None:
        return self._aliases.get(normalize_entity_name(name))

    def entities(self) -> list[EntityRecord]:
        return sorted(self._entities.values(), key=lambda e: e.entity_id)

    def children_of(self, entity_id: str) -> list[EntityRecord]:
        return [e for e in self.entities() if e.parent_entity == entity_id]

    # --- consent ----------------------------------------------------------

    def upsert_consent(self, entity_id: str, rules, validity: ValidityWindow,
                       credential: str, at: int | None = None,
                       metadata=()) -> ConsentRecord:
        at = _ts(at)
        with self._lock:
            entity = self.get_entity(entity_id)
            holder = self._authorize(credential, entity.rights_holder_ids)
            rules = tuple(rules)
            problems = validate_rules(rules) + validate_window(validity)
            if problems:
                raise MalformedRule("; ".join(problems))
            version = self._latest_version(entity_id) + 1
            record = ConsentRecord(
                entity_id=entity_id, rights_holder_id=holder, version=version,
                status="active", validity=validity, rules=rules, updated_at=at,
                metadata=metadata,
            )
            self._commit("consent_upserted", record_to_doc(record), at)
            self._note_consent_change("upsert", record, at)
            return record

    def revoke_consent(self, entity_id: str, credential: str,
                       at: int | None = None) -> ConsentRecord:
        at = _ts(at)
        with self._lock:
            entity = self.get_entity(entity_id)
            holder = self._authorize(credential, entity.rights_holder_ids)
            versions = self._versions.get(entity_id, [])
            if not versions:
                raise AlreadyRevoked(f"{entity_id}: no consent record to revoke")
            latest = versions[-1]
            if latest.status == "revoked":
                raise AlreadyRevoked(entity_id)
            record = ConsentRecord(
                entity_id=entity_id, rights_holder_id=holder,
                version=latest.version + 1, status="revoked",
                validity=latest.validity, rules=latest.rules, updated_at=at,
                metadata=latest.metadata,
            )
            self._commit("consent_revoked", record_to_doc(record), at)
            self._note_consent_change("revoke", record, at)
            return record

    def _note_consent_change(self, action: str, record: ConsentRecord, at: int):
        if self.ledger is None:
            return
        self.ledger.append_entry("consent_change", {
            "action": action,
            "entity_ids": [record.entity_id],
            "rights_holder_ids": [record.rights_holder_id],
            "version": record.version,
            "status": record.status,
            "at": at,
        }, at=at)

    def _latest_version(self, entity_id: str) -> int:
        versions = self._versions.get(entity_id, [])
        return versions[-1].version if versions else 0

    def lookup_consent(self, entity_id: str, at: int) -> ConsentRecord | None:
        candidates = [r for r in self._versions.get(entity_id, [])
                      if r.updated_at <= at]
        if not candidates:
            return None
        return max(candidates, key=lambda r: r.version)

    def consent_history(self, entity_id: str) -> list[ConsentRecord]:
        return list(self._versions.get(entity_id, []))

    # --- queries and reports ----------------------------------------------

    def batch_query(self, entity_ids, requester: str = OPTIN_AGENT,
                    at: int | None = None):
        """Look up every id and write one audit entry covering the batch.

        Unresolved names may be passed through as pseudo-ids so the
        audit trail shows what was asked for, not only what existed.
        """
        entity_ids = list(entity_ids)
        if not entity_ids:
            raise EmptyBatch("batch_query requires at least one entity id")
        at = _ts(at)
        with self._lock:
            results: dict[str, ConsentRecord | None] = {}
            summary: dict[str, str] = {}
            for entity_id in entity_ids:
                record = self.lookup_consent(entity_id, at)
                results[entity_id] = record
                if record is None:
                    summary[entity_id] = "not_found"
                elif record.status == "active" and not record.rules:
                    summary[entity_id] = "reserved"
                else:
                    summary[entity_id] = "found"
            audit_payload = {
                "query_id": uuid.uuid4().hex,
                "entity_ids": entity_ids,
                "requester": requester,
                "at": at,
                "results_summary": summary,
            }
            self._commit("query_executed", audit_payload, at)
            return results, self._audits[-1]

    @property
    def audits(self) -> tuple[QueryAuditEntry, ...]:
        return tuple(self._audits)

    def rights_holder_report(self, rights_holder_id: str, credential: str,
                             from_ts: int | None = None,
                             until: int | None = None) -> dict:
        """Everything a rights holder may see: queries that touched their
        entities in the range, consent history, and matching ledger
        entries. Other holders' entities never appear."""
        self._authorize(credential, {rights_holder_id})
        mine = [e for e in self.entities() if rights_holder_id in e.rights_holder_ids]
        my_ids = {e.entity_id for e in mine}

        queries = []
        for audit in self._audits:
            if from_ts is not None and audit.at < from_ts:
                continue
            if until is not None and audit.at >= until:
                continue
            if my_ids.intersection(audit.entity_ids):
                queries.append(audit.to_doc())

        entities = []
        for entity in mine:
            history = self.consent_history(entity.entity_id)
            entities.append({
                "entity_id": entity.entity_id,
                "display_name": entity.display_name,
                "entity_type": entity.entity_type,
                "consent": record_to_doc(history[-1]) if history else None,
                "history": [
                    {"version": r.version, "status": r.status, "updated_at": r.updated_at}
                    for r in history
                ],
            })

        ledger_entries = []
        if self.ledger is not None:
            for entry, payload in self.ledger.query_entries(
                    rights_holder_id=rights_holder_id, from_ts=from_ts, until=until):
                ledger_entries.append({**entry.to_doc(), "payload_kind": entry.kind,
                                       "payload": payload})

        return {
            "rights_holder_id": rights_holder_id,
            "range": {"from": from_ts, "until": until},
            "entities": entities,
            "queries": queries,
            "ledger_entries": ledger_entries,
        }

    # --- operator export/import -------------------------------------------

    def export_consent_documents(self, directory):
        """Write the latest consent record of every entity as one
        canonical document per file. Operator tooling, not an API."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        written = []
        for entity_id, versions in sorted(self._versions.items()):
            doc = record_to_doc(versions[-1])
            path = directory / f"{entity_id}.json"
            path.write_text(canonical_json(doc) + "\n", encoding="utf-8")
            written.append(path)
        return written

    def restore_consent_document(self, doc, at: int | None = None) -> ConsentRecord:
        """Operator-level restore: re-applies an exported consent document
        as a fresh version, bypassing credentials. The entity must exist."""
        entity_id = doc["entity_id"]
        at = _ts(at if at is not None else doc.get("updated_at"))
        with self._lock:
            self.get_entity(entity_id)
            rules = tuple(rule_from_doc(r) for r in doc.get("rules", ()))
            problems = validate_rules(rules)
            if problems:
                raise MalformedRule("; ".join(problems))
            record = ConsentRecord(
                entity_id=entity_id,
                rights_holder_id=doc["rights_holder_id"],
                version=self._latest_version(entity_id) + 1,
                status=doc.get("status", "active"),
                validity=window_from_doc(doc.get("validity")),
                rules=rules,
                updated_at=at,
                metadata=tuple(doc.get("metadata", {}).items()),
            )
            kind = "consent_revoked" if record.status == "revoked" else "consent_upserted"
            self._commit(kind, record_to_doc(record), at)
            return record


def _ts(at: int | None) -> int:
    return int(time.time()) if at is None else int(at)


def _check_entity(record: EntityRecord):
    if not isinstance(record, EntityRecord):
        raise SchemaViolation("expected an EntityRecord", "")
    if not _SLUG.match(record.entity_id or ""):
        raise SchemaViolation("entity_id must be a lowercase slug", "entity_id")
    if record.entity_type not in ENTITY_TYPES:
        raise SchemaViolation(f"unknown entity type {record.entity_type!r}", "entity_type")
    if not record.display_name or not record.display_name.strip():
        raise SchemaViolation("display_name must be non-empty", "display_name")
    if record.entity_type == "work_part" and record.parent_entity is None:
        raise SchemaViolation("work_part requires parent_entity", "parent_entity")
    if not record.rights_holder_ids:
        raise SchemaViolation("rights_holder_ids must be non-empty", "rights_holder_ids")
