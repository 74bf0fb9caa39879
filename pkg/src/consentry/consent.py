"""Consent rule language and pure evaluation semantics.

Everything here is immutable and side-effect free. Rules are permissive
only: a record with no applicable rule denies, a record with rules=[]
denies as explicitly reserved, and an absent record denies as not in the
registry. Adding a rule can therefore never take a permission away.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import InvalidRequest
from .intent import (
    Aspect,
    COMBINATION_ORIGINAL_ONLY,
    IntentRequest,
    Qualifier,
    ROLES,
    UnknownAspect,
    extract_entity_refs,
    validate_intent,
)

RULE_COMBINATIONS = frozenset({"original_only", "any", "none"})
RECORD_STATUSES = frozenset({"active", "revoked"})

REASON_NOT_IN_REGISTRY = "not_in_registry"
REASON_EXPLICITLY_RESERVED = "explicitly_reserved"
REASON_REVOKED = "revoked"
REASON_EXPIRED = "expired"
REASON_ROLE = "role_not_permitted"
REASON_COMBINATION = "combination_not_permitted"
REASON_QUALIFIER = "qualifier_violation"
REASON_NO_RULE = "no_matching_rule"

# When several rules fail on different dimensions, report the most
# specific failure. Order fixed; earlier wins.
_DENY_PRECEDENCE = (REASON_ROLE, REASON_COMBINATION, REASON_QUALIFIER, REASON_NO_RULE)


@dataclass(frozen=True)
class ValidityWindow:
    """Half-open interval [from_ts, until); until absent = open-ended."""

    from_ts: int
    until: int | None = None


def check_validity_window(window: ValidityWindow | None, at: int) -> bool:
    if window is None:
        return True
    if at < window.from_ts:
        return False
    return window.until is None or at < window.until


def _normset(values) -> frozenset:
    return frozenset(str(v).strip().lower().replace(" ", "_").replace("-", "_")
                     for v in values)


@dataclass(frozen=True)
class QualifierConstraints:
    """Allow-sets are exclusive whitelists when present; deny always wins.

    quality_caps maps a quality key to the maximum numeric value a
    request may ask for under that key.
    """

    purpose_allow: frozenset | None = None
    purpose_deny: frozenset = frozenset()
    distribution_allow: frozenset | None = None
    distribution_deny: frozenset = frozenset()
    quality_caps: tuple[tuple[str, float], ...] = ()

    def __post_init__(self):
        if self.purpose_allow is not None:
            object.__setattr__(self, "purpose_allow", _normset(self.purpose_allow))
        object.__setattr__(self, "purpose_deny", _normset(self.purpose_deny))
        if self.distribution_allow is not None:
            object.__setattr__(self, "distribution_allow", _normset(self.distribution_allow))
        object.__setattr__(self, "distribution_deny", _normset(self.distribution_deny))
        caps = self.quality_caps
        if isinstance(caps, dict):
            caps = caps.items()
        object.__setattr__(self, "quality_caps",
                           tuple(sorted((str(k), float(v)) for k, v in caps)))

    @property
    def caps_map(self) -> dict:
        return dict(self.quality_caps)

    def is_empty(self) -> bool:
        return (self.purpose_allow is None and not self.purpose_deny
                and self.distribution_allow is None and not self.distribution_deny
                and not self.quality_caps)


EMPTY_CONSTRAINTS = QualifierConstraints()


@dataclass(frozen=True)
class PermissionRule:
    """One permissive condition: the aspect that may be used, in which
    roles, under which combination with other material, and under which
    output qualifiers. ``validity`` overrides the record window."""

    aspect: str = "any"
    roles: frozenset = frozenset({"descriptor"})
    combination: str = "any"
    qualifier_constraints: QualifierConstraints = EMPTY_CONSTRAINTS
    validity: ValidityWindow | None = None

    def __post_init__(self):
        object.__setattr__(self, "aspect", str(self.aspect).strip().lower())
        object.__setattr__(self, "roles", frozenset(str(r) for r in self.roles))


@dataclass(frozen=True)
class ConsentRecord:
    entity_id: str
    rights_holder_id: str
    version: int
    status: str
    validity: ValidityWindow
    rules: tuple[PermissionRule, ...]
    updated_at: int
    metadata: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))
        meta = self.metadata
        if isinstance(meta, dict):
            meta = meta.items()
        object.__setattr__(self, "metadata",
                           tuple(sorted((str(k), str(v)) for k, v in meta)))

    @property
    def metadata_map(self) -> dict:
        return dict(self.metadata)


@dataclass(frozen=True)
class EntityUse:
    """One entity reference as the evaluator sees it: which aspect, in
    which effective role, combined with what, under which qualifiers.

    other_specific_refs records whether the request contains any other
    specific reference; a combination=none rule matches only when it
    does not.
    """

    aspect: Aspect
    role: str
    combination: str
    qualifiers: tuple[Qualifier, ...] = ()
    other_specific_refs: bool = False

    def __post_init__(self):
        object.__setattr__(self, "qualifiers", tuple(self.qualifiers))


@dataclass(frozen=True)
class EntityVerdict:
    name: str
    outcome: str                       # permitted | denied
    entity_id: str | None = None
    reason: str | None = None
    matched_rule_index: int | None = None
    aspect: str | None = None
    role: str | None = None

    @property
    def subject(self) -> str:
        return self.entity_id if self.entity_id is not None else self.name


@dataclass(frozen=True)
class Verdict:
    overall: str                       # granted | denied
    entity_verdicts: tuple[EntityVerdict, ...]
    advisories: tuple[str, ...]
    evaluated_at: int

    def __post_init__(self):
        object.__setattr__(self, "entity_verdicts", tuple(self.entity_verdicts))
        object.__setattr__(self, "advisories", tuple(self.advisories))


# --- evaluation -----------------------------------------------------------

def check_qualifier_constraints(constraints: QualifierConstraints,
                                qualifiers) -> bool:
    purposes = [q.value for q in qualifiers if q.kind == "purpose"]
    distributions = [q.value for q in qualifiers if q.kind == "distribution"]

    if any(p in constraints.purpose_deny for p in purposes):
        return False
    if any(d in constraints.distribution_deny for d in distributions):
        return False
    if constraints.purpose_allow is not None:
        if not purposes or any(p not in constraints.purpose_allow for p in purposes):
            return False
    if constraints.distribution_allow is not None:
        if not distributions or any(d not in constraints.distribution_allow
                                    for d in distributions):
            return False

    caps = constraints.caps_map
    for q in qualifiers:
        if q.kind != "quality" or q.key not in caps:
            continue
        try:
            value = float(q.value)
        except (TypeError, ValueError):
            return False
        if value > caps[q.key]:
            return False
    return True


def _combination_matches(rule: PermissionRule, use: EntityUse) -> bool:
    if rule.combination == "any":
        return True
    if rule.combination == "original_only":
        return use.combination == COMBINATION_ORIGINAL_ONLY
    # none: the entity must be the only specific reference in the request
    return not use.other_specific_refs


def rule_matches(rule: PermissionRule, use: EntityUse, at: int) -> bool:
    """Full independent match of one rule against one use."""
    if rule.aspect != "any" and rule.aspect != use.aspect.value:
        return False
    if rule.validity is not None and not check_validity_window(rule.validity, at):
        return False
    if use.role not in rule.roles:
        return False
    if not _combination_matches(rule, use):
        return False
    return check_qualifier_constraints(rule.qualifier_constraints, use.qualifiers)


def evaluate_entity_use(use: EntityUse, record: ConsentRecord | None, at: int,
                        entity_id: str | None = None,
                        name: str | None = None) -> EntityVerdict:
    """Decide one entity use against one consent record. Total function;
    absent record denies, which is the opt-out default doing its job."""
    if entity_id is None and record is not None:
        entity_id = record.entity_id
    base = dict(
        name=name if name is not None else (entity_id or ""),
        entity_id=entity_id,
        aspect=use.aspect.value,
        role=use.role,
    )

    if record is None:
        return EntityVerdict(outcome="denied", reason=REASON_NOT_IN_REGISTRY, **base)
    if record.status == "revoked":
        return EntityVerdict(outcome="denied", reason=REASON_REVOKED, **base)
    if not check_validity_window(record.validity, at):
        return EntityVerdict(outcome="denied", reason=REASON_EXPIRED, **base)
    if not record.rules:
        return EntityVerdict(outcome="denied", reason=REASON_EXPLICITLY_RESERVED, **base)

    candidates = []
    for index, rule in enumerate(record.rules):
        aspect_ok = rule.aspect == "any" or rule.aspect == use.aspect.value
        window_ok = rule.validity is None or check_validity_window(rule.validity, at)
        if not (aspect_ok and window_ok):
            candidates.append(REASON_NO_RULE)
            continue
        if use.role not in rule.roles:
            candidates.append(REASON_ROLE)
        elif not _combination_matches(rule, use):
            candidates.append(REASON_COMBINATION)
        elif not check_qualifier_constraints(rule.qualifier_constraints, use.qualifiers):
            candidates.append(REASON_QUALIFIER)
        else:
            return EntityVerdict(outcome="permitted", matched_rule_index=index, **base)

    reason = next(r for r in _DENY_PRECEDENCE if r in candidates)
    return EntityVerdict(outcome="denied", reason=reason, **base)


def evaluate_request(request: IntentRequest, records: dict, at: int) -> Verdict:
    """Evaluate every specific reference in the request; granted only
    when all of them are permitted (vacuously granted with none).

    ``records`` maps entity_id to the ConsentRecord in force at ``at``.
    Unresolved references are denied as not_in_registry under the name
    the user wrote.
    """
    violations = validate_intent(request)
    if violations:
        raise InvalidRequest(violations)

    extracted = extract_entity_refs(request)
    verdicts = []
    for ex in extracted:
        use = EntityUse(
            aspect=ex.aspect,
            role=ex.role,
            combination=ex.combination,
            qualifiers=request.qualifiers,
            other_specific_refs=len(extracted) > 1,
        )
        record = None
        if ex.ref.resolved_id is not None:
            record = records.get(ex.ref.resolved_id)
        verdicts.append(evaluate_entity_use(
            use, record, at,
            entity_id=ex.ref.resolved_id,
            name=ex.ref.name,
        ))

    overall = "granted" if all(v.outcome == "permitted" for v in verdicts) else "denied"
    advisories = []
    for component in (*request.descriptors, *request.transformations):
        if component.kind == "generic" and component.category:
            advisories.append(
                f"generic reference {component.category!r} carries no consent "
                "conditions; naming a consenting entity makes the request attributable")

    return Verdict(overall=overall, entity_verdicts=tuple(verdicts),
                   advisories=tuple(advisories), evaluated_at=at)


# --- rule validation (used by the registry before accepting writes) -------

def validate_rules(rules) -> list[str]:
    problems = []
    for i, rule in enumerate(rules):
        where = f"rules[{i}]"
        if not isinstance(rule, PermissionRule):
            problems.append(f"{where}: not a PermissionRule")
            continue
        if rule.aspect != "any":
            try:
                Aspect.of(rule.aspect)
            except UnknownAspect:
                problems.append(f"{where}: unknown aspect {rule.aspect!r}")
        if not rule.roles:
            problems.append(f"{where}: roles must be non-empty")
        elif not rule.roles <= ROLES:
            problems.append(f"{where}: roles must be a subset of {sorted(ROLES)}")
        if rule.combination not in RULE_COMBINATIONS:
            problems.append(f"{where}: unknown combination {rule.combination!r}")
        if rule.validity is not None:
            problems.extend(f"{where}: {p}" for p in validate_window(rule.validity))
    return problems


def validate_window(window: ValidityWindow) -> list[str]:
    if not isinstance(window, ValidityWindow):
        return ["validity must be a window"]
    if window.until is not None and not window.from_ts < window.until:
        return ["validity window requires from < until"]
    return []


# --- canonical documents --------------------------------------------------

def window_to_doc(window: ValidityWindow | None):
    if window is None:
        return None
    doc = {"from": window.from_ts}
    if window.until is not None:
        doc["until"] = window.until
    return doc


def window_from_doc(doc) -> ValidityWindow | None:
    if doc is None:
        return None
    return ValidityWindow(from_ts=int(doc["from"]),
                          until=int(doc["until"]) if doc.get("until") is not None else None)


def constraints_to_doc(constraints: QualifierConstraints) -> dict:
    doc = {}
    if constraints.purpose_allow is not None:
        doc["purpose_allow"] = sorted(constraints.purpose_allow)
    if constraints.purpose_deny:
        doc["purpose_deny"] = sorted(constraints.purpose_deny)
    if constraints.distribution_allow is not None:
        doc["distribution_allow"] = sorted(constraints.distribution_allow)
    if constraints.distribution_deny:
        doc["distribution_deny"] = sorted(constraints.distribution_deny)
    if constraints.quality_caps:
        doc["quality_caps"] = {k: v for k, v in constraints.quality_caps}
    return doc


def constraints_from_doc(doc) -> QualifierConstraints:
    doc = doc or {}
    return QualifierConstraints(
        purpose_allow=frozenset(doc["purpose_allow"]) if "purpose_allow" in doc else None,
        purpose_deny=frozenset(doc.get("purpose_deny", ())),
        distribution_allow=(frozenset(doc["distribution_allow"])
                            if "distribution_allow" in doc else None),
        distribution_deny=frozenset(doc.get("distribution_deny", ())),
        quality_caps=tuple(dict(doc.get("quality_caps", {})).items()),
    )


def rule_to_doc(rule: PermissionRule) -> dict:
    doc = {
        "aspect": rule.aspect,
        "roles": sorted(rule.roles),
        "combination": rule.combination,
    }
    constraints = constraints_to_doc(rule.qualifier_constraints)
    if constraints:
        doc["qualifier_constraints"] = constraints
    if rule.validity is not None:
        doc["validity"] = window_to_doc(rule.validity)
    return doc


def rule_from_doc(doc) -> PermissionRule:
    return PermissionRule(
        aspect=doc.get("aspect", "any"),
        roles=frozenset(doc.get("roles", ())),
        combination=doc.get("combination", "any"),
        qualifier_constraints=constraints_from_doc(doc.get("qualifier_constraints")),
        validity=window_from_doc(doc.get("validity")),
    )


def record_to_doc(record: ConsentRecord) -> dict:
    doc = {
        "entity_id": record.entity_id,
        "rights_holder_id": record.rights_holder_id,
        "version": record.version,
        "status": record.status,
        "validity": window_to_doc(record.validity),
        "rules": [rule_to_doc(r) for r in record.rules],
        "updated_at": record.updated_at,
    }
    if record.metadata:
        doc["metadata"] = record.metadata_map
    return doc


def record_from_doc(doc) -> ConsentRecord:
    return ConsentRecord(
        entity_id=doc["entity_id"],
        rights_holder_id=doc["rights_holder_id"],
        version=int(doc["version"]),
        status=doc["status"],
        validity=window_from_doc(doc["validity"]),
        rules=tuple(rule_from_doc(r) for r in doc.get("rules", ())),
        updated_at=int(doc["updated_at"]),
        metadata=tuple(doc.get("metadata", {}).items()),
    )


def entity_verdict_to_doc(v: EntityVerdict) -> dict:
    doc = {"subject": v.subject, "name": v.name, "outcome": v.outcome}
    if v.entity_id is not None:
        doc["entity_id"] = v.entity_id
    if v.reason is not None:
        doc["reason"] = v.reason
    if v.matched_rule_index is not None:
        doc["matched_rule_index"] = v.matched_rule_index
    if v.aspect is not None:
        doc["aspect"] = v.aspect
    if v.role is not None:
        doc["role"] = v.role
    return doc


def verdict_to_doc(verdict: Verdict) -> dict:
    return {
        "overall": verdict.overall,
        "entity_verdicts": [entity_verdict_to_doc(v) for v in verdict.entity_verdicts],
        "advisories": list(verdict.advisories),
        "evaluated_at": verdict.evaluated_at,
    }
