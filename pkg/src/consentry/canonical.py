"""Canonical serialization and digest helpers.

Canonical form is UTF-8 JSON with lexicographically sorted keys and no
insignificant whitespace. Hash chains and request digests require the
serialization to be bit-exact, so every digest in the system goes through
these helpers.
"""

from __future__ import annotations

import hashlib
import json
import re

ZERO_DIGEST = "0" * 64

_WS_RE = re.compile(r"\s+")
_QUOTE_CHARS = "'\"`‘’“”"


def canonical_json(doc) -> str:
    """Serialize a JSON-compatible document in canonical form."""
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def digest_doc(doc) -> str:
    """SHA-256 of a document's canonical serialization, lowercase hex."""
    return sha256_hex(canonical_json(doc).encode("utf-8"))


def normalize_entity_name(name: str) -> str:
    """Normalize a user-written entity name for exact alias matching.

    Lowercase, trim, collapse internal whitespace, strip surrounding
    quote characters. No fuzzy matching beyond this: a false-positive
    resolution would grant rights incorrectly.
    """
    text = name.strip().strip(_QUOTE_CHARS).strip()
    return _WS_RE.sub(" ", text).lower()
