"""Verification engine: parse, resolve, query, evaluate, guide, grant.

One verify call runs the whole pipeline against the registry and leaves
exactly one verification entry in the ledger; a granted outcome also
issues a generation grant (one generation entry) that later
dissemination logging re-checks against the qualifier constraints that
were in force at issuance.

Works registered with work_part children are conjoined: a reference to
the parent work is evaluated against the parent's consent record and
against every child's record, so each rights-bearing layer of the work
has to have opted in before the whole clears.
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass, replace

from .canonical import normalize_entity_name, sha256_hex
from .consent import (
    ConsentRecord,
    EntityUse,
    EntityVerdict,
    Verdict,
    evaluate_request,
    entity_verdict_to_doc,
    evaluate_entity_use,
    check_qualifier_constraints,
    constraints_from_doc,
    constraints_to_doc,
    verdict_to_doc,
)
from .errors import NotGranted, RegistryUnavailable, StorageFailure, UnknownGrant
from .grammar import parse_text_prompt
from .intent import (
    IntentRequest,
    Qualifier,
    extract_entity_refs,
    intent_to_doc,
    parse_structured_intent,
    serialize_intent,
)

SUGGESTION_KINDS = frozenset({
    "remove_reference", "replace_with_original", "reframe_generic", "adjust_qualifier",
})


@dataclass(frozen=True)
class Suggestion:
    target: str
    suggestion_kind: str
    text: str

    def to_doc(self) -> dict:
        return {"target": self.target, "suggestion_kind": self.suggestion_kind,
                "text": self.text}


@dataclass(frozen=True)
class GrantEntity:
    """Per-entity attribution snapshot frozen into a grant."""

    entity_id: str
    rights_holder_id: str
    record_version: int
    rule_index: int
    constraints: dict

    def to_doc(self) -> dict:
        return {
            "entity_id": self.entity_id,
            "rights_holder_id": self.rights_holder_id,
            "record_version": self.record_version,
            "rule_index": self.rule_index,
            "constraints": dict(self.constraints),
        }


@dataclass(frozen=True)
class GenerationGrant:
    grant_id: str
    request_digest: str
    entities: tuple[GrantEntity, ...]
    issued_at: int
    compensation_eligible: tuple[str, ...]

    @property
    def entity_ids(self) -> list[str]:
        return [e.entity_id for e in self.entities]

    def to_doc(self) -> dict:
        return {
            "grant_id": self.grant_id,
            "request_digest": self.request_digest,
            "entities": [e.to_doc() for e in self.entities],
            "issued_at": self.issued_at,
            "compensation_eligible": list(self.compensation_eligible),
        }


def grant_from_doc(doc) -> GenerationGrant:
    return GenerationGrant(
        grant_id=doc["grant_id"],
        request_digest=doc["request_digest"],
        entities=tuple(GrantEntity(
            entity_id=e["entity_id"],
            rights_holder_id=e["rights_holder_id"],
            record_version=e["record_version"],
            rule_index=e["rule_index"],
            constraints=dict(e.get("constraints", {})),
        ) for e in doc.get("entities", ())),
        issued_at=doc["issued_at"],
        compensation_eligible=tuple(doc.get("compensation_eligible", ())),
    )


@dataclass(frozen=True)
class VerificationOutcome:
    verdict: Verdict
    guidance: tuple[Suggestion, ...]
    request: IntentRequest
    request_digest: str
    grant: GenerationGrant | None = None

    def to_doc(self) -> dict:
        return {
            "verdict": verdict_to_doc(self.verdict),
            "guidance": [s.to_doc() for s in self.guidance],
            "request": intent_to_doc(self.request),
            "request_digest": self.request_digest,
            "grant": self.grant.to_doc() if self.grant is not None else None,
        }


class Engine:
    def __init__(self, registry, ledger):
        self.registry = registry
        self.ledger = ledger
        self._grants: dict[str, GenerationGrant] = {}
        for _entry, payload in ledger.query_entries(kind="generation"):
            try:
                grant = grant_from_doc(payload)
            except (KeyError, TypeError):
                # Unreadable grant payload on a tampered chain; verify_chain
                # is the mechanism that reports the damage.
                continue
            self._grants[grant.grant_id] = grant

    # --- pipeline ---------------------------------------------------------

    def verify(self, prompt: str | None = None, intent=None,
               attachment: bytes | None = None,
               attachment_digest: str | None = None,
               at: int | None = None, trace: list | None = None) -> VerificationOutcome:
        """Run one verification; exactly one of prompt/intent is given.

        ``trace``, when a list, collects (step, detail) pairs for
        transcript printing; it never changes behavior.
        """
        import time as _time
        if at is None:
            at = int(_time.time())

        if (prompt is None) == (intent is None):
            raise ValueError("provide exactly one of prompt or intent")
        if prompt is not None:
            request = parse_text_prompt(prompt, attachment=attachment,
                                        attachment_digest=attachment_digest,
                                        received_at=at)
        elif isinstance(intent, IntentRequest):
            request = intent
        else:
            request = parse_structured_intent(intent)
        _note(trace, "parse", intent_to_doc(request))

        request = self.resolve_request(request)
        extracted = extract_entity_refs(request)
        _note(trace, "extract", [
            {"name": ex.ref.name, "aspect": ex.aspect.value, "role": ex.role,
             "combination": ex.combination} for ex in extracted
        ])
        _note(trace, "resolve", {
            ex.ref.name: ex.ref.resolved_id for ex in extracted
        })

        query_ids, child_map = self._query_targets(extracted)
        records: dict[str, ConsentRecord | None] = {}
        if query_ids:
            try:
                records, audit = self.registry.batch_query(query_ids, at=at)
            except StorageFailure as exc:
                raise RegistryUnavailable(str(exc)) from exc
            _note(trace, "query", audit.to_doc()["results_summary"])
        else:
            _note(trace, "query", {})

        verdict = evaluate_request(request, records, at)
        verdict = self._conjoin_work_parts(verdict, extracted, child_map, records,
                                           request, at)
        _note(trace, "evaluate", verdict_to_doc(verdict))

        guidance = tuple(generate_guidance(verdict, request, records))
        _note(trace, "guidance", [s.to_doc() for s in guidance])

        digest = sha256_hex(serialize_intent(request).encode("utf-8"))
        outcome = VerificationOutcome(
            verdict=verdict, guidance=guidance, request=request,
            request_digest=digest,
        )
        self._log_verification(outcome, records, at)
        if verdict.overall == "granted":
            grant = self._issue_grant(outcome, records, at)
            outcome = replace(outcome, grant=grant)
        return outcome

    def resolve_entities(self, refs):
        """Exact normalized-alias resolution; unresolved refs come back
        unchanged and will be denied as not_in_registry downstream."""
        return [ref.resolved(self.registry.resolve_alias(ref.name)) for ref in refs]

    def resolve_request(self, request: IntentRequest) -> IntentRequest:
        def fix(component):
            if component.kind == "specific" and component.ref is not None:
                resolved = self.registry.resolve_alias(component.ref.name)
                if resolved is not None:
                    return replace(component, ref=component.ref.resolved(resolved))
            return component

        return replace(
            request,
            descriptors=tuple(fix(d) for d in request.descriptors),
            transformations=tuple(fix(t) for t in request.transformations),
        )

    def _query_targets(self, extracted):
        """Ids for the batch query: resolved ids, their work_part
        children, and normalized names of unresolved refs so the audit
        trail shows what was asked for."""
        query_ids: list[str] = []
        child_map: dict[str, list] = {}

        def add(value):
            if value and value not in query_ids:
                query_ids.append(value)

        for ex in extracted:
            if ex.ref.resolved_id is None:
                add(normalize_entity_name(ex.ref.name))
                continue
            add(ex.ref.resolved_id)
            try:
                entity = self.registry.get_entity(ex.ref.resolved_id)
            except Exception:
                continue
            if entity.entity_type == "work":
                children = self.registry.children_of(entity.entity_id)
                if children:
                    child_map[entity.entity_id] = children
                    for child in children:
                        add(child.entity_id)
        return query_ids, child_map

    def _conjoin_work_parts(self, verdict: Verdict, extracted, child_map,
                            records, request: IntentRequest, at: int) -> Verdict:
        if not child_map:
            return verdict
        merged = list(verdict.entity_verdicts)
        for ex in extracted:
            children = child_map.get(ex.ref.resolved_id or "")
            if not children:
                continue
            use = EntityUse(
                aspect=ex.aspect, role=ex.role, combination=ex.combination,
                qualifiers=request.qualifiers,
                other_specific_refs=len(extracted) > 1,
            )
            for child in children:
                merged.append(evaluate_entity_use(
                    use, records.get(child.entity_id), at,
                    entity_id=child.entity_id, name=child.display_name,
                ))
        overall = "granted" if all(v.outcome == "permitted" for v in merged) else "denied"
        return replace(verdict, overall=overall, entity_verdicts=tuple(merged))

    # --- ledger writes ----------------------------------------------------

    def _log_verification(self, outcome: VerificationOutcome, records, at: int):
        entity_ids = [v.subject for v in outcome.verdict.entity_verdicts]
        holders = sorted({
            records[v.entity_id].rights_holder_id
            for v in outcome.verdict.entity_verdicts
            if v.entity_id is not None and records.get(v.entity_id) is not None
        })
        self.ledger.append_entry("verification", {
            "entity_ids": entity_ids,
            "rights_holder_ids": holders,
            "overall": outcome.verdict.overall,
            "request_digest": outcome.request_digest,
            "verdict": verdict_to_doc(outcome.verdict),
            "at": at,
        }, at=at)

    def _issue_grant(self, outcome: VerificationOutcome, records, at: int) -> GenerationGrant:
        entities = []
        for v in outcome.verdict.entity_verdicts:
            record = records.get(v.entity_id) if v.entity_id else None
            if record is None or v.matched_rule_index is None:
                continue
            rule = record.rules[v.matched_rule_index]
            entities.append(GrantEntity(
                entity_id=v.entity_id,
                rights_holder_id=record.rights_holder_id,
                record_version=record.version,
                rule_index=v.matched_rule_index,
                constraints=constraints_to_doc(rule.qualifier_constraints),
            ))
        grant = GenerationGrant(
            grant_id=uuid.uuid4().hex,
            request_digest=outcome.request_digest,
            entities=tuple(entities),
            issued_at=at,
            compensation_eligible=tuple(sorted({e.rights_holder_id for e in entities})),
        )
        self.ledger.append_entry("generation", {
            **grant.to_doc(),
            "entity_ids": grant.entity_ids,
            "rights_holder_ids": list(grant.compensation_eligible),
            "at": at,
        }, at=at)
        self._grants[grant.grant_id] = grant
        return grant

    # --- grants and dissemination -----------------------------------------

    @property
    def grants(self) -> dict:
        return dict(self._grants)

    def unlock_generation(self, outcome: VerificationOutcome) -> GenerationGrant:
        if outcome.verdict.overall != "granted":
            raise NotGranted("verification denied; no generation to unlock")
        if outcome.grant is not None:
            return outcome.grant
        raise NotGranted("outcome carries no grant; re-run verification")

    def get_grant(self, grant_id: str) -> GenerationGrant:
        grant = self._grants.get(grant_id)
        if grant is None:
            raise UnknownGrant(grant_id)
        return grant

    def register_dissemination(self, grant_id: str, platform: str, purpose: str,
                               at: int | None = None):
        """Log one dissemination of a granted output, re-checking the
        constraints frozen into the grant. Returns (entry, payload)."""
        import time as _time
        if at is None:
            at = int(_time.time())
        grant = self.get_grant(grant_id)

        qualifiers = []
        if platform:
            qualifiers.append(Qualifier(kind="distribution", key="platform", value=platform))
        if purpose:
            qualifiers.append(Qualifier(kind="purpose", key="purpose", value=purpose))

        blocked_by = [
            e.entity_id for e in grant.entities
            if not check_qualifier_constraints(constraints_from_doc(e.constraints),
                                               qualifiers)
        ]
        outcome = "blocked" if blocked_by else "allowed"
        payload = {
            "grant_id": grant.grant_id,
            "platform": platform,
            "purpose": purpose,
            "outcome": outcome,
            "blocked_by": blocked_by,
            "entity_ids": grant.entity_ids,
            "rights_holder_ids": list(grant.compensation_eligible),
            "at": at,
        }
        entry = self.ledger.append_entry("dissemination", payload, at=at)
        return entry, payload


# --- guidance --------------------------------------------------------------

def generate_guidance(verdict: Verdict, request: IntentRequest,
                      records=None) -> list[Suggestion]:
    """Deterministic denial-to-suggestion mapping plus generic-reference
    advisories. Pure function of its arguments."""
    records = records or {}
    out: list[Suggestion] = []

    for v in verdict.entity_verdicts:
        if v.outcome == "permitted":
            continue
        record = records.get(v.entity_id) if v.entity_id else None
        if v.reason in ("role_not_permitted", "combination_not_permitted"):
            slot = _first_non_original_descriptor(request)
            if record is not None and slot is not None and any(
                    rule.combination == "original_only" for rule in record.rules):
                out.append(Suggestion(
                    target=slot,
                    suggestion_kind="replace_with_original",
                    text=(f"{v.name} permits this use only in combination with "
                          "your own original input; replace the referenced "
                          "material with an upload of yours"),
                ))
                continue
            out.append(Suggestion(
                target=v.name, suggestion_kind="remove_reference",
                text=f"{v.name} does not permit this use; remove the reference"))
        elif v.reason == "qualifier_violation":
            out.append(Suggestion(
                target="qualifiers", suggestion_kind="adjust_qualifier",
                text=_describe_qualifier_violation(v, record, request)))
        else:
            out.append(Suggestion(
                target=v.name, suggestion_kind="remove_reference",
                text=_removal_text(v)))

    for i, component in enumerate((*request.descriptors, *request.transformations)):
        if component.kind == "generic" and component.category:
            out.append(Suggestion(
                target=component.category, suggestion_kind="reframe_generic",
                text=(f"a generic {component.category!r} reference carries no "
                      "consent conditions and cannot be attributed; naming a "
                      "consenting entity makes the request attributable"),
            ))
    return out


def _first_non_original_descriptor(request: IntentRequest) -> str | None:
    for i, d in enumerate(request.descriptors):
        if d.kind != "original":
            return f"descriptors[{i}]"
    return None


def _removal_text(v: EntityVerdict) -> str:
    name = v.name
    if v.reason == "not_in_registry":
        return (f"{name} is not in the registry, so no consent conditions "
                "exist and the reference cannot be used; remove it")
    if v.reason == "explicitly_reserved":
        return f"{name} has reserved all uses; remove the reference"
    if v.reason == "revoked":
        return f"consent for {name} has been revoked; remove the reference"
    if v.reason == "expired":
        return f"consent for {name} is not valid at this time; remove the reference"
    return f"no consent condition of {name} covers this use; remove the reference"


def _describe_qualifier_violation(v: EntityVerdict, record, request: IntentRequest) -> str:
    purposes = [q.value for q in request.qualifiers if q.kind == "purpose"]
    distributions = [q.value for q in request.qualifiers if q.kind == "distribution"]
    rules = record.rules if record is not None else ()
    for rule in rules:
        c = rule.qualifier_constraints
        for p in purposes:
            if p in c.purpose_deny:
                return f"purpose {p!r} is denied for {v.name}; choose a different purpose"
        for d in distributions:
            if d in c.distribution_deny:
                return f"distribution to {d!r} is denied for {v.name}; choose a different platform"
        if c.purpose_allow is not None:
            bad = [p for p in purposes if p not in c.purpose_allow]
            if bad or not purposes:
                allowed = ", ".join(sorted(c.purpose_allow))
                return f"{v.name} permits only these purposes: {allowed}"
        if c.distribution_allow is not None:
            bad = [d for d in distributions if d not in c.distribution_allow]
            if bad or not distributions:
                allowed = ", ".join(sorted(c.distribution_allow))
                return f"{v.name} permits distribution only to: {allowed}"
        caps = c.caps_map
        for q in request.qualifiers:
            if q.kind != "quality" or q.key not in caps:
                continue
            try:
                value = float(q.value)
            except (TypeError, ValueError):
                return f"quality {q.key!r} must be numeric for {v.name}"
            if value > caps[q.key]:
                return f"quality {q.key!r} exceeds the cap of {caps[q.key]:g} for {v.name}"
    return f"a qualifier conflicts with the consent conditions of {v.name}"


def _note(trace, step: str, detail):
    if trace is not None:
        trace.append((step, detail))
