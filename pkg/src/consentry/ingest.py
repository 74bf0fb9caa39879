"""Import and export of web preference declarations.

Two representative formats are supported: a reservation document (a JSON
list of {location, tdm-reservation, tdm-policy} objects) and a
line-oriented preferences text ("Path:" sections with "<Action>:
allow|deny" directives). Both map onto the same PreferenceDeclaration
shape and from there, conservatively, onto consent records: an output
permission becomes a single coarse any-aspect rule, anything less
becomes an explicitly reserved record. These legacy formats cannot say
more than that; refinement into nuanced rules is a registry operation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .consent import PermissionRule, ValidityWindow
from .errors import (
    MalformedDocument,
    PreferenceSyntaxError,
    Unauthorized,
    UnknownDirective,
    UnknownReservationValue,
)

ACTIONS = ("train", "output", "search", "transcribe", "translate", "clip",
           "describe", "rephrase")
_ACTION_SET = frozenset(ACTIONS)


@dataclass(frozen=True)
class PreferenceDeclaration:
    source_format: str                       # tdm_doc | ai_prefs_text
    scope: str
    directives: tuple[tuple[str, str], ...]  # (action, allow|deny)
    policy_url: str | None = None

    def __post_init__(self):
        items = self.directives
        if isinstance(items, dict):
            items = items.items()
        object.__setattr__(self, "directives",
                           tuple(sorted((str(k), str(v)) for k, v in items)))

    @property
    def directive_map(self) -> dict:
        return dict(self.directives)

    def key(self):
        """Identity up to source format: scope, directives, policy."""
        return (self.scope, self.directives, self.policy_url)


DENY_ALL = tuple((action, "deny") for action in ACTIONS)


def import_tdm_document(document) -> list[PreferenceDeclaration]:
    """Reservation semantics: 1 reserves every action, 0 allows output."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise MalformedDocument(f"not valid JSON: {exc}") from None
    if not isinstance(document, list):
        raise MalformedDocument("reservation document must be a list of entries")

    out = []
    for i, entry in enumerate(document):
        if not isinstance(entry, dict):
            raise MalformedDocument(f"entry {i} must be an object")
        for key in entry:
            if key not in ("location", "tdm-reservation", "tdm-policy"):
                raise MalformedDocument(f"entry {i}: unknown field {key!r}")
        location = entry.get("location")
        if not isinstance(location, str) or not location:
            raise MalformedDocument(f"entry {i}: location must be a non-empty string")
        reservation = entry.get("tdm-reservation")
        if not isinstance(reservation, int) or isinstance(reservation, bool):
            raise MalformedDocument(f"entry {i}: tdm-reservation must be an integer")
        if reservation not in (0, 1):
            raise UnknownReservationValue(f"entry {i}: tdm-reservation={reservation}")
        policy = entry.get("tdm-policy")
        if policy is not None and not isinstance(policy, str):
            raise MalformedDocument(f"entry {i}: tdm-policy must be a string")
        directives = DENY_ALL if reservation == 1 else (("output", "allow"),)
        out.append(PreferenceDeclaration(
            source_format="tdm_doc", scope=location,
            directives=directives, policy_url=policy,
        ))
    return out


def import_ai_preferences_text(text: str) -> list[PreferenceDeclaration]:
    """One declaration per "Path:" section; a blank line ends a section.

    Unknown directive names are errors rather than silently dropped:
    a dropped directive would quietly widen what a crawler may do.
    """
    declarations: list[PreferenceDeclaration] = []
    scope: str | None = None
    directives: dict[str, str] = {}
    policy: str | None = None
    section_line = 0

    def flush():
        nonlocal scope, directives, policy
        if scope is None:
            return
        if not directives:
            raise PreferenceSyntaxError("section has no directives", section_line)
        declarations.append(PreferenceDeclaration(
            source_format="ai_prefs_text", scope=scope,
            directives=tuple(directives.items()), policy_url=policy,
        ))
        scope, directives, policy = None, {}, None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("#"):
            continue
        if not line:
            flush()
            continue
        if ":" not in line:
            raise PreferenceSyntaxError(f"expected '<Name>: <value>', got {line!r}", lineno)
        name, _, value = line.partition(":")
        name = name.strip().lower()
        value = value.strip()
        if name == "path":
            flush()
            if not value:
                raise PreferenceSyntaxError("Path requires a pattern", lineno)
            scope = value
            section_line = lineno
            continue
        if scope is None:
            raise PreferenceSyntaxError("directive before any Path section", lineno)
        if name == "policy":
            if not value:
                raise PreferenceSyntaxError("Policy requires a URL", lineno)
            policy = value
            continue
        if name not in _ACTION_SET:
            raise UnknownDirective(f"line {lineno}: unknown directive {name!r}")
        if value.lower() not in ("allow", "deny"):
            raise PreferenceSyntaxError(
                f"directive value must be allow or deny, got {value!r}", lineno)
        directives[name] = value.lower()
    flush()
    return declarations


def export_ai_preferences_text(declarations) -> str:
    """Canonical form: fixed action order, one blank line between
    sections, Policy line last. Re-export of a re-import is byte-equal."""
    sections = []
    for d in declarations:
        lines = [f"Path: {d.scope}"]
        directive_map = d.directive_map
        for action in ACTIONS:
            if action in directive_map:
                lines.append(f"{action.capitalize()}: {directive_map[action]}")
        if d.policy_url:
            lines.append(f"Policy: {d.policy_url}")
        sections.append("\n".join(lines))
    if not sections:
        return ""
    return "\n\n".join(sections) + "\n"


def declarations_to_consent(declarations, entity_id: str, rights_holder_id: str,
                            registry, credential: str, at: int | None = None):
    """Fold declarations into one consent record for the entity.

    Only an explicit output:allow with no output denial produces a rule,
    and that rule is the widest this path can ever produce (any aspect,
    both roles, any combination). Everything else lands as an explicitly
    reserved record, and train/search style directives ride along as
    metadata for transparency without gating inference.
    """
    declarations = list(declarations)
    if not declarations:
        raise MalformedDocument("at least one declaration is required")
    if registry.identify_holder(credential) != rights_holder_id:
        raise Unauthorized("credential does not belong to the named rights holder")

    output_allow = False
    output_deny = False
    metadata: dict[str, str] = {}
    for d in declarations:
        directive_map = d.directive_map
        if not directive_map:
            raise MalformedDocument(f"declaration for {d.scope!r} has no directives")
        for action, value in directive_map.items():
            metadata[f"pref:{action}"] = value
            if action == "output":
                output_allow = output_allow or value == "allow"
                output_deny = output_deny or value == "deny"
        if d.policy_url:
            metadata["pref:policy_url"] = d.policy_url
    metadata["pref:scopes"] = ",".join(d.scope for d in declarations)

    if output_allow and not output_deny:
        rules = (PermissionRule(
            aspect="any",
            roles=frozenset({"descriptor", "transformation"}),
            combination="any",
        ),)
    else:
        rules = ()

    import time as _time
    at = int(_time.time()) if at is None else int(at)
    return registry.upsert_consent(
        entity_id, rules, ValidityWindow(from_ts=at), credential,
        at=at, metadata=tuple(metadata.items()),
    )
