"""Intent model: descriptors, transformations, qualifiers.

A generation request is represented as three component lists. Descriptors
carry the primary subject of the request, transformations modify
descriptor attributes (a style, a voice), and qualifiers describe the
output itself (quality, distribution target, purpose of use). Components
referencing a unique rights-bearing entity are ``specific``; ``generic``
components name a category with no rights implications; ``original``
descriptors are new creative input supplied by the user.

All types are immutable after construction and all functions here are
pure. Invariants are checked by :func:`validate_intent`, not by the
constructors, so that a structurally complete but invalid request can be
built, reported on, and rejected with a full violation list.
"""

from __future__ import annotations

import time
import json
from dataclasses import dataclass, field, replace

from .canonical import canonical_json
from .errors import SchemaViolation, UnknownAspect, UnknownQualifierKind

# Component roles a specific reference can take when evaluated.
ROLE_DESCRIPTOR = "descriptor"
ROLE_TRANSFORMATION = "transformation"
ROLES = frozenset({ROLE_DESCRIPTOR, ROLE_TRANSFORMATION})

# Combination class of a request: original_only when every descriptor is
# user-supplied original input, mixed otherwise.
COMBINATION_ORIGINAL_ONLY = "original_only"
COMBINATION_MIXED = "mixed"

DESCRIPTOR_KINDS = frozenset({"generic", "specific", "original"})
TRANSFORMATION_KINDS = frozenset({"generic", "specific", "foundational"})
QUALIFIER_KINDS = frozenset({"quality", "distribution", "purpose"})
ENTITY_TYPES = frozenset({"person", "group", "work", "work_part"})

CORE_ASPECTS = frozenset({
    "whole", "voice", "style", "likeness", "lyrics", "melody",
    "beat", "rhythm", "harmony", "composition", "recording",
})

# Aspects that attach to a person's identity rather than to a work. For
# these the effective role of a reference depends on what else the
# request contains (see classify_reference_role).
PERSON_ASPECTS = frozenset({"voice", "style", "likeness"})

# Extensible controlled vocabularies for distribution/purpose qualifier
# values. register_* widens them at runtime; values are stored normalized
# (lowercase, underscores).
PURPOSE_VOCABULARY = {
    "personal", "commercial", "non_commercial", "social_sharing",
    "education", "research",
}
DISTRIBUTION_VOCABULARY = {
    "instagram", "tiktok", "youtube", "spotify", "private", "public_web",
}


def register_purpose(value: str) -> None:
    PURPOSE_VOCABULARY.add(_normalize_vocab_value(value))


def register_distribution(value: str) -> None:
    DISTRIBUTION_VOCABULARY.add(_normalize_vocab_value(value))


def _normalize_vocab_value(value) -> str:
    return str(value).strip().lower().replace(" ", "_").replace("-", "_")


@dataclass(frozen=True)
class Aspect:
    """Facet of an entity being used: whole, voice, style, a stem, ...

    The vocabulary is closed except for ``stem:<instrument-label>``,
    which admits arbitrary lowercase labels for individual instrument
    tracks.
    """

    value: str

    def __post_init__(self):
        v = self.value
        if v in CORE_ASPECTS:
            return
        if v.startswith("stem:"):
            label = v[len("stem:"):]
            if label and label == label.lower() and not label.isspace():
                return
            raise UnknownAspect(f"bad stem label: {v!r}")
        raise UnknownAspect(f"unknown aspect: {v!r}")

    @classmethod
    def of(cls, value: str) -> "Aspect":
        return cls(str(value).strip().lower())

    def __str__(self) -> str:
        return self.value


WHOLE = Aspect("whole")


@dataclass(frozen=True)
class EntityRef:
    """Reference to a unique rights-bearing entity, as written by the user.

    ``resolved_id`` is filled in by registry resolution; an unresolved
    reference keeps it None and is later denied as not_in_registry.
    """

    entity_type: str
    name: str
    resolved_id: str | None = None

    def resolved(self, entity_id: str | None) -> "EntityRef":
        return replace(self, resolved_id=entity_id)


@dataclass(frozen=True)
class Descriptor:
    kind: str
    aspect: Aspect = WHOLE
    ref: EntityRef | None = None            # required iff kind=specific
    category: str | None = None             # required iff kind=generic
    payload_digest: str | None = None       # required iff kind=original


@dataclass(frozen=True)
class Transformation:
    kind: str
    aspect: Aspect = WHOLE
    ref: EntityRef | None = None            # required iff kind=specific
    category: str | None = None
    rule_text: str | None = None            # required iff kind=foundational
    applies_to: tuple[int, ...] = ()        # empty = applies to all descriptors

    def __post_init__(self):
        object.__setattr__(self, "applies_to", tuple(self.applies_to))


@dataclass(frozen=True)
class Qualifier:
    kind: str
    key: str
    value: str | int | float

    def __post_init__(self):
        if self.kind in ("distribution", "purpose"):
            object.__setattr__(self, "value", _normalize_vocab_value(self.value))


@dataclass(frozen=True)
class IntentRequest:
    descriptors: tuple[Descriptor, ...] = ()
    transformations: tuple[Transformation, ...] = ()
    qualifiers: tuple[Qualifier, ...] = ()
    raw_input: str | None = None
    received_at: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "descriptors", tuple(self.descriptors))
        object.__setattr__(self, "transformations", tuple(self.transformations))
        object.__setattr__(self, "qualifiers", tuple(self.qualifiers))

    @property
    def combination_class(self) -> str:
        if all(d.kind == "original" for d in self.descriptors):
            return COMBINATION_ORIGINAL_ONLY
        return COMBINATION_MIXED


@dataclass(frozen=True)
class Violation:
    """One invariant violation, addressable by component path."""

    code: str
    path: str
    message: str


@dataclass(frozen=True)
class ExtractedRef:
    """One specific reference pulled out of a request for verification."""

    ref: EntityRef
    aspect: Aspect
    role: str
    combination: str


def now_ts() -> int:
    return int(time.time())


# --- validation -----------------------------------------------------------

def validate_intent(request: IntentRequest) -> list[Violation]:
    """Return every invariant violation in the request (empty = valid)."""
    out: list[Violation] = []

    def bad(code, path, message):
        out.append(Violation(code, path, message))

    if not request.descriptors:
        bad("MissingDescriptor", "descriptors", "at least one descriptor is required")

    seen_ids: dict[int, str] = {}
    for list_name, items, expected in (
        ("descriptors", request.descriptors, Descriptor),
        ("transformations", request.transformations, Transformation),
        ("qualifiers", request.qualifiers, Qualifier),
    ):
        for i, item in enumerate(items):
            path = f"{list_name}[{i}]"
            if not isinstance(item, expected):
                bad("WrongComponentType", path,
                    f"expected {expected.__name__}, got {type(item).__name__}")
                continue
            if id(item) in seen_ids:
                bad("DuplicateComponent", path,
                    f"same component object also at {seen_ids[id(item)]}")
            seen_ids[id(item)] = path

    for i, d in enumerate(request.descriptors):
        if not isinstance(d, Descriptor):
            continue
        path = f"descriptors[{i}]"
        if d.kind not in DESCRIPTOR_KINDS:
            bad("UnknownKind", path, f"unknown descriptor kind {d.kind!r}")
            continue
        if d.kind == "specific":
            if d.ref is None:
                bad("MissingEntityRef", path, "specific descriptor requires ref")
            else:
                out.extend(_check_ref(d.ref, path + ".ref"))
        elif d.kind == "generic" and not d.category:
            bad("MissingCategory", path, "generic descriptor requires category")
        elif d.kind == "original" and not d.payload_digest:
            bad("MissingPayloadDigest", path,
                "original descriptor requires a content digest (no upload attached?)")

    n_desc = len(request.descriptors)
    for i, t in enumerate(request.transformations):
        if not isinstance(t, Transformation):
            continue
        path = f"transformations[{i}]"
        if t.kind not in TRANSFORMATION_KINDS:
            bad("UnknownKind", path, f"unknown transformation kind {t.kind!r}")
            continue
        if t.kind == "specific":
            if t.ref is None:
                bad("MissingEntityRef", path, "specific transformation requires ref")
            else:
                out.extend(_check_ref(t.ref, path + ".ref"))
        elif t.kind == "generic" and not t.category:
            bad("MissingCategory", path, "generic transformation requires category")
        elif t.kind == "foundational":
            if not t.rule_text:
                bad("MissingRuleText", path, "foundational transformation requires rule_text")
            if t.ref is not None:
                bad("ForbiddenRef", path, "foundational transformation must not carry a ref")
        for j in t.applies_to:
            if not isinstance(j, int) or not (0 <= j < n_desc):
                bad("BadAppliesTo", path, f"applies_to index {j!r} out of range")

    for i, q in enumerate(request.qualifiers):
        if not isinstance(q, Qualifier):
            continue
        path = f"qualifiers[{i}]"
        if q.kind not in QUALIFIER_KINDS:
            bad("UnknownKind", path, f"unknown qualifier kind {q.kind!r}")
            continue
        if q.kind == "quality" and not q.key:
            bad("EmptyQualifierKey", path, "quality qualifier requires a key")
        elif q.kind == "purpose" and q.value not in PURPOSE_VOCABULARY:
            bad("UnknownQualifierValue", path, f"purpose {q.value!r} not in vocabulary")
        elif q.kind == "distribution" and q.value not in DISTRIBUTION_VOCABULARY:
            bad("UnknownQualifierValue", path, f"distribution {q.value!r} not in vocabulary")

    return out


def _check_ref(ref: EntityRef, path: str) -> list[Violation]:
    out = []
    if not isinstance(ref, EntityRef):
        return [Violation("WrongComponentType", path, "expected EntityRef")]
    if ref.entity_type not in ENTITY_TYPES:
        out.append(Violation("UnknownEntityType", path, f"unknown entity type {ref.entity_type!r}"))
    if not ref.name or not ref.name.strip():
        out.append(Violation("EmptyEntityName", path, "entity name must be non-empty"))
    return out


# --- role classification and extraction -----------------------------------

def classify_reference_role(component, request: IntentRequest) -> str:
    """Effective role of a specific component within its request.

    A person-aspect reference (voice/style/likeness) acts as a
    transformation whenever the request contains a non-original
    descriptor to transform; when every descriptor is the user's own
    original input the same reference conditions the output directly and
    is classified as a descriptor. References with any other aspect keep
    the role of the list they appear in.
    """
    person_aspect = component.aspect.value in PERSON_ASPECTS
    if person_aspect:
        has_non_original = any(d.kind != "original" for d in request.descriptors)
        return ROLE_TRANSFORMATION if has_non_original else ROLE_DESCRIPTOR
    if isinstance(component, Descriptor):
        return ROLE_DESCRIPTOR
    return ROLE_TRANSFORMATION


def extract_entity_refs(request: IntentRequest) -> list[ExtractedRef]:
    """All specific references in the request, with effective role and
    combination class. Generic and original components contribute none.
    """
    combination = request.combination_class
    out = []
    for component in (*request.descriptors, *request.transformations):
        if component.kind == "specific" and component.ref is not None:
            out.append(ExtractedRef(
                ref=component.ref,
                aspect=component.aspect,
                role=classify_reference_role(component, request),
                combination=combination,
            ))
    return out


# --- canonical intent document --------------------------------------------

INTENT_DOC_VERSION = 1


def intent_to_doc(request: IntentRequest) -> dict:
    """Map a request onto the canonical intent document structure."""
    doc = {
        "version": INTENT_DOC_VERSION,
        "descriptors": [_descriptor_to_doc(d) for d in request.descriptors],
        "transformations": [_transformation_to_doc(t) for t in request.transformations],
        "qualifiers": [
            {"kind": q.kind, "key": q.key, "value": q.value} for q in request.qualifiers
        ],
    }
    if request.raw_input is not None:
        doc["raw_input"] = request.raw_input
    if request.received_at is not None:
        doc["received_at"] = request.received_at
    return doc


def serialize_intent(request: IntentRequest) -> str:
    """Canonical serialization: sorted keys, compact, UTF-8."""
    return canonical_json(intent_to_doc(request))


def _ref_to_doc(ref: EntityRef) -> dict:
    doc = {"entity_type": ref.entity_type, "name": ref.name}
    if ref.resolved_id is not None:
        doc["resolved_id"] = ref.resolved_id
    return doc


def _descriptor_to_doc(d: Descriptor) -> dict:
    doc = {"kind": d.kind, "aspect": d.aspect.value}
    if d.ref is not None:
        doc["ref"] = _ref_to_doc(d.ref)
    if d.category is not None:
        doc["category"] = d.category
    if d.payload_digest is not None:
        doc["payload_digest"] = d.payload_digest
    return doc


def _transformation_to_doc(t: Transformation) -> dict:
    doc = {"kind": t.kind, "aspect": t.aspect.value}
    if t.ref is not None:
        doc["ref"] = _ref_to_doc(t.ref)
    if t.category is not None:
        doc["category"] = t.category
    if t.rule_text is not None:
        doc["rule_text"] = t.rule_text
    if t.applies_to:
        doc["applies_to"] = list(t.applies_to)
    return doc


def parse_structured_intent(document) -> IntentRequest:
    """Parse a canonical intent document (text or mapping) losslessly.

    Schema errors report the offending field path; aspect and qualifier
    kind vocabularies are closed and raise their own error types so the
    caller can distinguish a typo from a malformed document.
    """
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f"not valid JSON: {exc}", "") from None
    if not isinstance(document, dict):
        raise SchemaViolation("intent document must be an object", "")

    allowed = {"version", "descriptors", "transformations", "qualifiers",
               "raw_input", "received_at"}
    for key in document:
        if key not in allowed:
            raise SchemaViolation(f"unknown field {key!r}", key)

    version = document.get("version")
    if version != INTENT_DOC_VERSION:
        raise SchemaViolation(f"unsupported version {version!r}", "version")

    descriptors = [
        _descriptor_from_doc(item, f"descriptors[{i}]")
        for i, item in enumerate(_expect_list(document, "descriptors"))
    ]
    transformations = [
        _transformation_from_doc(item, f"transformations[{i}]")
        for i, item in enumerate(_expect_list(document, "transformations"))
    ]
    qualifiers = [
        _qualifier_from_doc(item, f"qualifiers[{i}]")
        for i, item in enumerate(_expect_list(document, "qualifiers"))
    ]

    raw_input = document.get("raw_input")
    if raw_input is not None and not isinstance(raw_input, str):
        raise SchemaViolation("raw_input must be a string", "raw_input")
    received_at = document.get("received_at")
    if received_at is not None and not isinstance(received_at, int):
        raise SchemaViolation("received_at must be an integer timestamp", "received_at")

    return IntentRequest(
        descriptors=tuple(descriptors),
        transformations=tuple(transformations),
        qualifiers=tuple(qualifiers),
        raw_input=raw_input,
        received_at=received_at,
    )


def _expect_list(doc: dict, key: str) -> list:
    value = doc.get(key, [])
    if not isinstance(value, list):
        raise SchemaViolation(f"{key} must be a list", key)
    return value


def _expect_obj(item, path: str) -> dict:
    if not isinstance(item, dict):
        raise SchemaViolation("component must be an object", path)
    return item


def _opt_str(obj: dict, key: str, path: str) -> str | None:
    value = obj.get(key)
    if value is None:
        return None
    if not isinstance(value, str):
        raise SchemaViolation(f"{key} must be a string", f"{path}.{key}")
    return value


def _aspect_from_doc(obj: dict, path: str) -> Aspect:
    value = obj.get("aspect", "whole")
    if not isinstance(value, str):
        raise SchemaViolation("aspect must be a string", f"{path}.aspect")
    return Aspect.of(value)


def _ref_from_doc(obj: dict, path: str) -> EntityRef | None:
    raw = obj.get("ref")
    if raw is None:
        return None
    raw = _expect_obj(raw, f"{path}.ref")
    for key in raw:
        if key not in ("entity_type", "name", "resolved_id"):
            raise SchemaViolation(f"unknown field {key!r}", f"{path}.ref.{key}")
    entity_type = raw.get("entity_type")
    name = raw.get("name")
    if not isinstance(entity_type, str):
        raise SchemaViolation("ref.entity_type must be a string", f"{path}.ref.entity_type")
    if not isinstance(name, str):
        raise SchemaViolation("ref.name must be a string", f"{path}.ref.name")
    return EntityRef(entity_type=entity_type, name=name,
                     resolved_id=_opt_str(raw, "resolved_id", f"{path}.ref"))


def _descriptor_from_doc(item, path: str) -> Descriptor:
    obj = _expect_obj(item, path)
    for key in obj:
        if key not in ("kind", "aspect", "ref", "category", "payload_digest"):
            raise SchemaViolation(f"unknown field {key!r}", f"{path}.{key}")
    kind = obj.get("kind")
    if not isinstance(kind, str):
        raise SchemaViolation("kind must be a string", f"{path}.kind")
    return Descriptor(
        kind=kind,
        aspect=_aspect_from_doc(obj, path),
        ref=_ref_from_doc(obj, path),
        category=_opt_str(obj, "category", path),
        payload_digest=_opt_str(obj, "payload_digest", path),
    )


def _transformation_from_doc(item, path: str) -> Transformation:
    obj = _expect_obj(item, path)
    for key in obj:
        if key not in ("kind", "aspect", "ref", "category", "rule_text", "applies_to"):
            raise SchemaViolation(f"unknown field {key!r}", f"{path}.{key}")
    kind = obj.get("kind")
    if not isinstance(kind, str):
        raise SchemaViolation("kind must be a string", f"{path}.kind")
    applies_to = obj.get("applies_to", [])
    if not isinstance(applies_to, list) or not all(isinstance(i, int) for i in applies_to):
        raise SchemaViolation("applies_to must be a list of integers", f"{path}.applies_to")
    return Transformation(
        kind=kind,
        aspect=_aspect_from_doc(obj, path),
        ref=_ref_from_doc(obj, path),
        category=_opt_str(obj, "category", path),
        rule_text=_opt_str(obj, "rule_text", path),
        applies_to=tuple(applies_to),
    )


def _qualifier_from_doc(item, path: str) -> Qualifier:
    obj = _expect_obj(item, path)
    for key in obj:
        if key not in ("kind", "key", "value"):
            raise SchemaViolation(f"unknown field {key!r}", f"{path}.{key}")
    kind = obj.get("kind")
    if not isinstance(kind, str):
        raise SchemaViolation("kind must be a string", f"{path}.kind")
    if kind not in QUALIFIER_KINDS:
        raise UnknownQualifierKind(f"unknown qualifier kind {kind!r}")
    key = obj.get("key")
    if not isinstance(key, str):
        raise SchemaViolation("key must be a string", f"{path}.key")
    value = obj.get("value")
    if not isinstance(value, (str, int, float)) or isinstance(value, bool):
        raise SchemaViolation("value must be text or a number", f"{path}.value")
    return Qualifier(kind=kind, key=key, value=value)
