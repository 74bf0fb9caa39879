"""Runnable reference scenarios with self-checking transcripts.

Both scenarios seed the same single-artist registry: the entity
"grimes" whose one consent condition permits voice use as a descriptor
in combination with original input only. The deny scenario references a
song that was never registered and uses the voice to transform it; the
grant scenario supplies the user's own recording instead.
"""

from __future__ import annotations

import json
import tempfile
from dataclasses import dataclass
from pathlib import Path

from .canonical import sha256_hex
from .consent import PermissionRule, ValidityWindow
from .engine import Engine, VerificationOutcome
from .errors import UnknownScenario
from .ledger import LedgerStore
from .registry import ConsentRegistry, EntityRecord

T0 = 1_700_000_000
VERIFY_AT = T0 + 60

HOLDER_ID = "rh-grimes"
HOLDER_SECRET = "grimes-secret"

DENY_PROMPT = "Create a song from `Rolling in the Deep' with Grimes's Voice"
GRANT_PROMPT = "Sing this song with Grimes's voice"
GRANT_ATTACHMENT = b"home recording: my own vocal take, 44.1kHz\n"

SCENARIO_NAMES = ("grimes-deny", "grimes-grant")


def seed_grimes_fixture(registry: ConsentRegistry) -> None:
    registry.add_rights_holder(HOLDER_ID, "Grimes", HOLDER_SECRET, at=T0)
    registry.register_entity(EntityRecord(
        entity_id="grimes",
        entity_type="person",
        display_name="Grimes",
        aliases=frozenset({"grimes"}),
        rights_holder_ids=frozenset({HOLDER_ID}),
    ), HOLDER_SECRET, at=T0)
    registry.upsert_consent(
        "grimes",
        [PermissionRule(aspect="voice", roles=frozenset({"descriptor"}),
                        combination="original_only")],
        ValidityWindow(from_ts=T0),
        HOLDER_SECRET, at=T0,
    )


@dataclass(frozen=True)
class ScenarioResult:
    name: str
    transcript: str
    ok: bool
    deviations: tuple[str, ...]
    outcome: VerificationOutcome


def run_scenario(name: str, state_dir=None) -> ScenarioResult:
    """Seed a fresh registry, run the named scenario, and check the
    outcome against its expected shape. state_dir=None uses a throwaway
    directory."""
    if name not in SCENARIO_NAMES:
        raise UnknownScenario(name)
    if state_dir is None:
        with tempfile.TemporaryDirectory(prefix="consentry-scenario-") as tmp:
            return _run(name, Path(tmp))
    return _run(name, Path(state_dir))


def _run(name: str, state_dir: Path) -> ScenarioResult:
    ledger = LedgerStore(state_dir / "ledger")
    registry = ConsentRegistry(state_dir / "registry.jsonl", ledger=ledger)
    seed_grimes_fixture(registry)
    engine = Engine(registry, ledger)

    lines = [f"scenario: {name}",
             "seeded: entity grimes (person), 1 rule "
             "{aspect=voice, roles=[descriptor], combination=original_only}"]

    trace: list = []
    if name == "grimes-deny":
        lines.append(f"prompt: {DENY_PROMPT}")
        outcome = engine.verify(prompt=DENY_PROMPT, at=VERIFY_AT, trace=trace)
    else:
        lines.append(f"prompt: {GRANT_PROMPT} (with attached recording, digest "
                     f"{sha256_hex(GRANT_ATTACHMENT)[:12]}...)")
        outcome = engine.verify(prompt=GRANT_PROMPT, attachment=GRANT_ATTACHMENT,
                                at=VERIFY_AT, trace=trace)

    for step, detail in trace:
        lines.append(f"-- {step}")
        lines.append(_indent(json.dumps(detail, sort_keys=True, indent=2)))

    lines.append(f"overall: {outcome.verdict.overall}")
    for v in outcome.verdict.entity_verdicts:
        reason = f" ({v.reason})" if v.reason else ""
        lines.append(f"  {v.subject}: {v.outcome}{reason}")
    for s in outcome.guidance:
        lines.append(f"  guidance [{s.suggestion_kind}] {s.target}: {s.text}")
    if outcome.grant is not None:
        lines.append(f"grant: {outcome.grant.grant_id} entities={outcome.grant.entity_ids} "
                     f"compensation_eligible={list(outcome.grant.compensation_eligible)}")

    deviations = _check(name, outcome)
    if deviations:
        lines.append("DEVIATIONS:")
        lines.extend(f"  - {d}" for d in deviations)
    else:
        lines.append("expected outcome reproduced")

    return ScenarioResult(name=name, transcript="\n".join(lines),
                          ok=not deviations, deviations=tuple(deviations),
                          outcome=outcome)


def _check(name: str, outcome: VerificationOutcome) -> list[str]:
    deviations = []
    verdicts = {v.subject: v for v in outcome.verdict.entity_verdicts}
    if name == "grimes-deny":
        if outcome.verdict.overall != "denied":
            deviations.append(f"overall={outcome.verdict.overall}, expected denied")
        song = next((v for v in outcome.verdict.entity_verdicts
                     if v.name == "Rolling in the Deep"), None)
        if song is None:
            deviations.append("no verdict for Rolling in the Deep")
        elif song.reason != "not_in_registry":
            deviations.append(f"Rolling in the Deep reason={song.reason}, "
                              "expected not_in_registry")
        grimes = verdicts.get("grimes")
        if grimes is None:
            deviations.append("no verdict for grimes")
        elif grimes.reason != "role_not_permitted":
            deviations.append(f"grimes reason={grimes.reason}, expected role_not_permitted")
        if outcome.grant is not None:
            deviations.append("grant issued on a denied verdict")
    else:
        if outcome.verdict.overall != "granted":
            deviations.append(f"overall={outcome.verdict.overall}, expected granted")
        if outcome.grant is None:
            deviations.append("no grant issued")
        else:
            if outcome.grant.entity_ids != ["grimes"]:
                deviations.append(f"grant entities={outcome.grant.entity_ids}, "
                                  "expected ['grimes']")
            if list(outcome.grant.compensation_eligible) != [HOLDER_ID]:
                deviations.append(
                    f"compensation_eligible={list(outcome.grant.compensation_eligible)}, "
                    f"expected ['{HOLDER_ID}']")
    return deviations


def _indent(text: str, prefix: str = "   ") -> str:
    return "\n".join(prefix + line for line in text.splitlines())
