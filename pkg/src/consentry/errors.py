"""Error types shared across the package.

Every domain error carries a stable machine-readable ``code`` (the class
name) so the gateway can map it to an API error body without string
matching on messages.
"""

from __future__ import annotations


class ConsentryError(Exception):
    """Base class for all domain errors."""

    @property
    def code(self) -> str:
        return type(self).__name__


# --- intent parsing -------------------------------------------------------

class EmptyInput(ConsentryError):
    """Prompt text was empty or whitespace."""


class UnrecognizedPattern(ConsentryError):
    """Prompt text is not covered by the controlled grammar."""


class SchemaViolation(ConsentryError):
    """Structured intent document does not conform to the schema."""

    def __init__(self, message: str, field_path: str = ""):
        super().__init__(message)
        self.field_path = field_path


class UnknownAspect(ConsentryError):
    """Aspect value outside the closed vocabulary."""


class UnknownQualifierKind(ConsentryError):
    """Qualifier kind outside {quality, distribution, purpose}."""


# --- consent evaluation ---------------------------------------------------

class InvalidRequest(ConsentryError):
    """Intent request failed invariant validation."""

    def __init__(self, violations):
        self.violations = tuple(violations)
        super().__init__("; ".join(v.code for v in self.violations) or "invalid request")


# --- registry -------------------------------------------------------------

class Unauthorized(ConsentryError):
    """Credential does not match an authorized rights holder."""


class UnknownEntity(ConsentryError):
    """Entity id is not registered."""


class DuplicateEntityId(ConsentryError):
    """Entity id already registered."""


class DuplicateRightsHolder(ConsentryError):
    """Rights holder id already registered."""


class AliasCollision(ConsentryError):
    """Normalized alias already points at another entity."""


class MalformedRule(ConsentryError):
    """Permission rule violates rule invariants."""


class AlreadyRevoked(ConsentryError):
    """Consent record is already revoked."""


class EmptyBatch(ConsentryError):
    """batch_query called with no entity ids."""


# --- ledger ---------------------------------------------------------------

class StorageFailure(ConsentryError):
    """Persistent store could not be read or written."""


# --- engine ---------------------------------------------------------------

class NotGranted(ConsentryError):
    """Generation cannot be unlocked from a denied verdict."""


class UnknownGrant(ConsentryError):
    """No generation grant with that id."""


class RegistryUnavailable(ConsentryError):
    """Registry backend failed while serving a verification."""


# --- preference ingest ----------------------------------------------------

class MalformedDocument(ConsentryError):
    """Preference document is structurally invalid."""


class UnknownReservationValue(ConsentryError):
    """TDM reservation flag outside {0, 1}."""


class PreferenceSyntaxError(ConsentryError):
    """ai-preferences text failed to parse."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class UnknownDirective(ConsentryError):
    """Preference directive key outside the closed action set."""


# --- gateway --------------------------------------------------------------

class UnknownScenario(ConsentryError):
    """No scenario fixture with that name."""
