"""Deterministic prompt grammar.

Covers a fixed clause set over the verbs create/turn/sing/make: quoted
work titles, "this <medium>" for user uploads, possessive person aspects
("with Grimes's voice"), named and generic styles, and a few output
qualifiers. Anything the grammar does not cover raises
UnrecognizedPattern rather than guessing; a smarter extractor can sit in
front of this as long as it emits the same structured intent document.

The grammar is intentionally strict about consuming the whole prompt.
Partial matches would silently drop references, and a dropped reference
is exactly the failure mode this layer exists to prevent.
"""

from __future__ import annotations

import re

from .canonical import sha256_hex
from .errors import EmptyInput, UnrecognizedPattern
from .intent import (
    Aspect,
    CORE_ASPECTS,
    Descriptor,
    EntityRef,
    IntentRequest,
    Qualifier,
    Transformation,
)

MEDIA_WORDS = ("song", "image", "photo", "picture", "video", "recording",
               "track", "sample")
_MEDIA = "|".join(MEDIA_WORDS)

# Single-word instrument labels accepted as stem aspects in possessive
# clauses ("with Daft Punk's synth").
STEM_WORDS = frozenset({
    "guitar", "bass", "drums", "keyboard", "piano", "vocals", "synth",
})

_NAME = r"[A-Z][\w.\-]*(?:\s+[A-Z][\w.\-]*){0,2}"

_VERB_RE = re.compile(r"(create|turn|sing|make)\b", re.IGNORECASE)
_SEP_RE = re.compile(r"(?:\s*,\s*(?:and\s+)?|\s+(?:and\s+)?)")

_THIS_MEDIUM_RE = re.compile(rf"this\s+({_MEDIA})\b")
_ART_MEDIUM_RE = re.compile(rf"an?\s+({_MEDIA})\b")

# Quote pairs: ASCII single/double, LaTeX `...', and curly variants.
_QUOTE_RES = [
    re.compile(r"`([^`']+)'"),
    re.compile(r"'([^']+)'"),
    re.compile(r"\"([^\"]+)\""),
    re.compile(r"“([^”]+)”"),
    re.compile(r"‘([^’]+)’"),
]

_FROM_THIS_RE = re.compile(rf"(?:from|with)\s+this\s+({_MEDIA})\b")
_FROM_RE = re.compile(r"from\s+")
_POSSESSIVE_RE = re.compile(rf"with\s+({_NAME})(?:'s|’s|'|’)\s+(\w+)\b")
_POSSESSIVE_CONT_RE = re.compile(rf"\s+and\s+({_NAME})(?:'s|’s|'|’)\s+(\w+)\b")
_INTO_STYLE_RE = re.compile(r"into\s+an?\s+(.+?)\s+style\b")
_STYLE_OF_RE = re.compile(rf"in\s+the\s+style\s+of\s+({_NAME})")
_PURPOSE_RE = re.compile(r"for\s+([a-z][\w\-]*)\s+use\b")
_DISTRIBUTION_RE = re.compile(r"for\s+(?:an?\s+)?([A-Z]\w*)(?:\s+(?:post|upload))?\b")
_QUALITY_RE = re.compile(r"in\s+(high|low|full|ultra)\s+(resolution|quality|definition)\b")


def parse_text_prompt(text: str, attachment: bytes | None = None,
                      attachment_digest: str | None = None,
                      received_at: int | None = None) -> IntentRequest:
    """Parse a prompt into an IntentRequest, consuming the full text.

    ``attachment`` (or a precomputed ``attachment_digest``) supplies the
    content that "this image" / "this song" refers to. Parsing succeeds
    without one; validation then reports the missing payload digest.
    """
    if text is None or not str(text).strip():
        raise EmptyInput("prompt is empty")
    if attachment is not None and attachment_digest is None:
        attachment_digest = sha256_hex(attachment)

    s = str(text).strip()
    while s and s[-1] in ".!":
        s = s[:-1].rstrip()

    m = _VERB_RE.match(s)
    if m is None:
        raise UnrecognizedPattern(f"prompt must start with one of create/turn/sing/make: {text!r}")
    pos = _skip_ws(s, m.end())

    descriptors: list[Descriptor] = []
    transformations: list[Transformation] = []
    qualifiers: list[Qualifier] = []

    pos = _parse_object(s, pos, descriptors, attachment_digest)
    while pos < len(s):
        sep = _SEP_RE.match(s, pos)
        if sep is None or sep.end() == pos:
            raise UnrecognizedPattern(f"unparsed text at: {s[pos:]!r}")
        nxt = _parse_clause(s, sep.end(), descriptors, transformations,
                            qualifiers, attachment_digest)
        if nxt is None:
            raise UnrecognizedPattern(f"unparsed text at: {s[sep.end():]!r}")
        pos = nxt

    if not descriptors and not transformations and not qualifiers:
        raise UnrecognizedPattern(f"no actionable content in prompt: {text!r}")

    return IntentRequest(
        descriptors=tuple(descriptors),
        transformations=tuple(transformations),
        qualifiers=tuple(qualifiers),
        raw_input=str(text),
        received_at=received_at,
    )


def _skip_ws(s: str, pos: int) -> int:
    while pos < len(s) and s[pos].isspace():
        pos += 1
    return pos


def _quoted_at(s: str, pos: int):
    for rx in _QUOTE_RES:
        m = rx.match(s, pos)
        if m:
            return m.group(1).strip(), m.end()
    return None


def _parse_object(s: str, pos: int, descriptors: list, digest: str | None) -> int:
    """The noun phrase right after the verb.

    "a <medium>" frames the output and contributes no component;
    "this <medium>" is the user's upload; a quoted title is a work.
    """
    m = _THIS_MEDIUM_RE.match(s, pos)
    if m:
        descriptors.append(Descriptor(kind="original", payload_digest=digest))
        return m.end()
    m = _ART_MEDIUM_RE.match(s, pos)
    if m:
        return m.end()
    q = _quoted_at(s, pos)
    if q:
        title, end = q
        descriptors.append(Descriptor(
            kind="specific", ref=EntityRef(entity_type="work", name=title)))
        return end
    raise UnrecognizedPattern(f"expected a medium, 'this <medium>', or a quoted title at: {s[pos:]!r}")


def _parse_clause(s: str, pos: int, descriptors: list, transformations: list,
                  qualifiers: list, digest: str | None):
    m = _FROM_THIS_RE.match(s, pos)
    if m:
        descriptors.append(Descriptor(kind="original", payload_digest=digest))
        return m.end()

    m = _FROM_RE.match(s, pos)
    if m:
        q = _quoted_at(s, m.end())
        if q:
            title, end = q
            descriptors.append(Descriptor(
                kind="specific", ref=EntityRef(entity_type="work", name=title)))
            return end
        return None

    m = _POSSESSIVE_RE.match(s, pos)
    if m:
        # "with A's melody and B's voice" shares one "with".
        parts = [(m.group(1), m.group(2))]
        end = m.end()
        while True:
            cont = _POSSESSIVE_CONT_RE.match(s, end)
            if cont is None:
                break
            parts.append((cont.group(1), cont.group(2)))
            end = cont.end()
        parsed = []
        for name, aspect_word in parts:
            aspect = _possessive_aspect(aspect_word)
            if aspect is None:
                return None
            parsed.append(Transformation(
                kind="specific", aspect=aspect,
                ref=EntityRef(entity_type="person", name=name)))
        transformations.extend(parsed)
        return end

    m = _STYLE_OF_RE.match(s, pos)
    if m:
        transformations.append(Transformation(
            kind="specific", aspect=Aspect("style"),
            ref=EntityRef(entity_type="person", name=m.group(1))))
        return m.end()

    m = _INTO_STYLE_RE.match(s, pos)
    if m:
        component = _style_phrase(m.group(1))
        if component is None:
            return None
        transformations.append(component)
        return m.end()

    m = _QUALITY_RE.match(s, pos)
    if m:
        qualifiers.append(Qualifier(kind="quality", key=m.group(2), value=m.group(1)))
        return m.end()

    m = _PURPOSE_RE.match(s, pos)
    if m:
        qualifiers.append(Qualifier(kind="purpose", key="purpose", value=m.group(1)))
        return m.end()

    m = _DISTRIBUTION_RE.match(s, pos)
    if m:
        qualifiers.append(Qualifier(kind="distribution", key="platform", value=m.group(1)))
        return m.end()

    return None


def _possessive_aspect(word: str):
    word = word.lower()
    if word in STEM_WORDS:
        return Aspect(f"stem:{word}")
    if word in CORE_ASPECTS and word != "whole":
        return Aspect(word)
    return None


def _style_phrase(middle: str):
    """Interpret the words of "into a ... style".

    A leading run of capitalized tokens names a group ("Ghibli anime" →
    the group Ghibli, flavor word absorbed); an all-lowercase phrase is a
    generic style category with no rights implications.
    """
    tokens = middle.split()
    name_tokens = []
    i = 0
    while i < len(tokens) and i < 3 and tokens[i][0].isupper():
        name_tokens.append(tokens[i])
        i += 1
    rest = tokens[i:]
    if any(t[0].isupper() for t in rest):
        return None
    if name_tokens:
        return Transformation(
            kind="specific", aspect=Aspect("style"),
            ref=EntityRef(entity_type="group", name=" ".join(name_tokens)))
    if rest:
        return Transformation(kind="generic", aspect=Aspect("style"),
                              category=" ".join(rest))
    return None
