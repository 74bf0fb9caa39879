"""Consent registry and inference-time opt-in verification engine.

Generation requests are parsed into descriptor/transformation/qualifier
components, their specific references resolved against an opt-out-by-
default registry of consent conditions, and a request is granted only
when every referenced rights holder's conditions are met. Grants,
verifications, disseminations, and consent changes land in a
hash-chained ledger for attribution and transparency reporting.
"""

from .canonical import canonical_json, digest_doc, normalize_entity_name, sha256_hex
from .consent import (
    ConsentRecord,
    EntityUse,
    EntityVerdict,
    PermissionRule,
    QualifierConstraints,
    ValidityWindow,
    Verdict,
    check_qualifier_constraints,
    check_validity_window,
    evaluate_entity_use,
    evaluate_request,
)
from .engine import Engine, GenerationGrant, Suggestion, VerificationOutcome, generate_guidance
from .errors import ConsentryError
from .grammar import parse_text_prompt
from .intent import (
    Aspect,
    Descriptor,
    EntityRef,
    IntentRequest,
    Qualifier,
    Transformation,
    classify_reference_role,
    extract_entity_refs,
    parse_structured_intent,
    serialize_intent,
    validate_intent,
)
from .ledger import LedgerStore
from .registry import ConsentRegistry, EntityRecord, RightsHolderAccount
from .scenarios import run_scenario

__all__ = [
    "Aspect", "ConsentRecord", "ConsentRegistry", "ConsentryError",
    "Descriptor", "Engine", "EntityRecord", "EntityRef", "EntityUse",
    "EntityVerdict", "GenerationGrant", "IntentRequest", "LedgerStore",
    "PermissionRule", "Qualifier", "QualifierConstraints",
    "RightsHolderAccount", "Suggestion", "Transformation", "ValidityWindow",
    "Verdict", "VerificationOutcome", "canonical_json",
    "check_qualifier_constraints", "check_validity_window",
    "classify_reference_role", "digest_doc", "evaluate_entity_use",
    "evaluate_request", "extract_entity_refs", "generate_guidance",
    "normalize_entity_name", "parse_structured_intent", "parse_text_prompt",
    "run_scenario", "serialize_intent", "sha256_hex", "validate_intent",
]
