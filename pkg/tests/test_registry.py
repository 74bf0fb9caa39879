import json

import pytest

from consentry.consent import PermissionRule, ValidityWindow
from consentry.errors import (
    AliasCollision,
    AlreadyRevoked,
    DuplicateEntityId,
    DuplicateRightsHolder,
    EmptyBatch,
    MalformedRule,
    SchemaViolation,
    Unauthorized,
    UnknownEntity,
)
from consentry.ledger import LedgerStore
from consentry.registry import ConsentRegistry, EntityRecord

T0 = 1_700_000_000
SECRET = "holder-secret"
VOICE_RULE = PermissionRule(aspect="voice", roles=frozenset({"descriptor"}),
                            combination="original_only")
WINDOW = ValidityWindow(from_ts=T0)


@pytest.fixture
def registry(tmp_path):
    return ConsentRegistry(tmp_path / "registry.jsonl",
                           ledger=LedgerStore(tmp_path / "ledger"))


def seeded(registry):
    registry.add_rights_holder("rh-a", "Holder A", SECRET, at=T0)
    registry.register_entity(
        EntityRecord(entity_id="grimes", entity_type="person",
                     display_name="Grimes", aliases=frozenset({"grimes"}),
                     rights_holder_ids=frozenset({"rh-a"})),
        credential=SECRET, at=T0)
    return registry


# --- accounts ---------------------------------------------------------------

def test_add_holder_and_identify(registry):
    registry.add_rights_holder("rh-a", "Holder A", SECRET, at=T0)
    assert registry.identify_holder(SECRET) == "rh-a"
    assert registry.identify_holder("wrong") is None


def test_credential_stored_as_digest_only(registry, tmp_path):
    registry.add_rights_holder("rh-a", "Holder A", SECRET, at=T0)
    on_disk = (tmp_path / "registry.jsonl").read_text()
    assert SECRET not in on_disk


def test_duplicate_holder_rejected(registry):
    registry.add_rights_holder("rh-a", "Holder A", SECRET, at=T0)
    with pytest.raises(DuplicateRightsHolder):
        registry.add_rights_holder("rh-a", "Again", "other", at=T0)


def test_holder_id_must_be_slug(registry):
    with pytest.raises(SchemaViolation):
        registry.add_rights_holder("Not A Slug", "X", SECRET, at=T0)


# --- entities ---------------------------------------------------------------

def test_register_and_resolve(registry):
    seeded(registry)
    entity = registry.get_entity("grimes")
    assert entity.display_name == "Grimes"
    assert registry.resolve_alias("Grimes") == "grimes"
    assert registry.resolve_alias("  GRIMES  ") == "grimes"
    assert registry.resolve_alias('"Grimes"') == "grimes"
    assert registry.resolve_alias("nobody") is None


def test_register_requires_matching_credential(registry):
    registry.add_rights_holder("rh-a", "Holder A", SECRET, at=T0)
    registry.add_rights_holder("rh-b", "Holder B", "other-secret", at=T0)
    record = EntityRecord(entity_id="x", entity_type="person", display_name="X",
                          rights_holder_ids=frozenset({"rh-a"}))
    with pytest.raises(Unauthorized):
        registry.register_entity(record, credential="other-secret", at=T0)
    registry.register_entity(record, credential=SECRET, at=T0)


def test_register_rejects_unknown_holder(registry):
    registry.add_rights_holder("rh-a", "Holder A", SECRET, at=T0)
    record = EntityRecord(entity_id="x", entity_type="person", display_name="X",
                          rights_holder_ids=frozenset({"rh-a", "rh-ghost"}))
    with pytest.raises(Unauthorized):
        registry.register_entity(record, credential=SECRET, at=T0)


def test_duplicate_entity_id(registry):
    seeded(registry)
    with pytest.raises(DuplicateEntityId):
        registry.register_entity(
            EntityRecord(entity_id="grimes", entity_type="person",
                         display_name="Other",
                         rights_holder_ids=frozenset({"rh-a"})),
            credential=SECRET, at=T0)


def test_alias_collision(registry):
    seeded(registry)
    with pytest.raises(AliasCollision):
        registry.register_entity(
            EntityRecord(entity_id="grimes-2", entity_type="person",
                         display_name="grimes",
                         rights_holder_ids=frozenset({"rh-a"})),
            credential=SECRET, at=T0)


def test_parent_must_exist(registry):
    registry.add_rights_holder("rh-a", "Holder A", SECRET, at=T0)
    record = EntityRecord(entity_id="part", entity_type="work_part",
                          display_name="Part", parent_entity="missing",
                          rights_holder_ids=frozenset({"rh-a"}))
    with pytest.raises(UnknownEntity):
        registry.register_entity(record, credential=SECRET, at=T0)


def test_children_of(registry):
    seeded(registry)
    registry.register_entity(
        EntityRecord(entity_id="album", entity_type="work",
                     display_name="Album", rights_holder_ids=frozenset({"rh-a"})),
        credential=SECRET, at=T0)
    for i in range(2):
        registry.register_entity(
            EntityRecord(entity_id=f"track-{i}", entity_type="work_part",
                         display_name=f"Track {i}", parent_entity="album",
                         rights_holder_ids=frozenset({"rh-a"})),
            credential=SECRET, at=T0)
    assert [e.entity_id for e in registry.children_of("album")] == \
        ["track-0", "track-1"]


# --- consent versions -------------------------------------------------------

def test_upsert_creates_version_1(registry):
    seeded(registry)
    record = registry.upsert_consent("grimes", [VOICE_RULE], WINDOW,
                                     credential=SECRET, at=T0)
    assert (record.version, record.status) == (1, "active")
    assert record.rights_holder_id == "rh-a"


def test_upsert_bumps_version(registry):
    seeded(registry)
    registry.upsert_consent("grimes", [VOICE_RULE], WINDOW, credential=SECRET, at=T0)
    second = registry.upsert_consent("grimes", [], WINDOW,
                                     credential=SECRET, at=T0 + 10)
    assert second.version == 2
    assert registry.lookup_consent("grimes", T0 + 20) == second


def test_upsert_requires_authorization(registry):
    seeded(registry)
    with pytest.raises(Unauthorized):
        registry.upsert_consent("grimes", [VOICE_RULE], WINDOW,
                                credential="bad", at=T0)


def test_upsert_validates_rules(registry):
    seeded(registry)
    bad = PermissionRule(aspect="voice", roles=frozenset(), combination="any")
    with pytest.raises(MalformedRule):
        registry.upsert_consent("grimes", [bad], WINDOW, credential=SECRET, at=T0)


def test_upsert_validates_window(registry):
    seeded(registry)
    with pytest.raises(MalformedRule):
        registry.upsert_consent("grimes", [VOICE_RULE],
                                ValidityWindow(from_ts=T0 + 10, until=T0),
                                credential=SECRET, at=T0)


def test_temporal_lookup_picks_latest_at_or_before(registry):
    seeded(registry)
    registry.upsert_consent("grimes", [VOICE_RULE], WINDOW, credential=SECRET, at=T0)
    registry.upsert_consent("grimes", [], WINDOW, credential=SECRET, at=T0 + 100)
    assert registry.lookup_consent("grimes", T0 - 1) is None
    assert registry.lookup_consent("grimes", T0).version == 1
    assert registry.lookup_consent("grimes", T0 + 99).version == 1
    assert registry.lookup_consent("grimes", T0 + 100).version == 2


def test_revoke_appends_revoked_version(registry):
    seeded(registry)
    registry.upsert_consent("grimes", [VOICE_RULE], WINDOW, credential=SECRET, at=T0)
    revoked = registry.revoke_consent("grimes", credential=SECRET, at=T0 + 5)
    assert (revoked.version, revoked.status) == (2, "revoked")
    assert revoked.rules == (VOICE_RULE,)


def test_revoke_without_record(registry):
    seeded(registry)
    with pytest.raises(AlreadyRevoked):
        registry.revoke_consent("grimes", credential=SECRET, at=T0)


def test_revoke_twice(registry):
    seeded(registry)
    registry.upsert_consent("grimes", [VOICE_RULE], WINDOW, credential=SECRET, at=T0)
    registry.revoke_consent("grimes", credential=SECRET, at=T0 + 5)
    with pytest.raises(AlreadyRevoked):
        registry.revoke_consent("grimes", credential=SECRET, at=T0 + 6)


def test_history_in_version_order(registry):
    seeded(registry)
    registry.upsert_consent("grimes", [VOICE_RULE], WINDOW, credential=SECRET, at=T0)
    registry.upsert_consent("grimes", [], WINDOW, credential=SECRET, at=T0 + 1)
    registry.revoke_consent("grimes", credential=SECRET, at=T0 + 2)
    history = registry.consent_history("grimes")
    assert [(r.version, r.status) for r in history] == \
        [(1, "active"), (2, "active"), (3, "revoked")]


# --- batch queries and audits ----------------------------------------------

def test_batch_query_summary(registry):
    seeded(registry)
    registry.register_entity(
        EntityRecord(entity_id="mute", entity_type="person", display_name="Mute",
                     rights_holder_ids=frozenset({"rh-a"})),
        credential=SECRET, at=T0)
    registry.upsert_consent("grimes", [VOICE_RULE], WINDOW, credential=SECRET, at=T0)
    registry.upsert_consent("mute", [], WINDOW, credential=SECRET, at=T0)
    results, audit = registry.batch_query(["grimes", "mute", "ghost"], at=T0 + 1)
    assert results["grimes"].version == 1
    assert results["ghost"] is None
    assert dict(audit.results_summary) == {
        "grimes": "found", "mute": "reserved", "ghost": "not_found"}
    assert audit.requester == "optin_agent"


def test_empty_batch_rejected(registry):
    with pytest.raises(EmptyBatch):
        registry.batch_query([], at=T0)


def test_audits_survive_reopen(registry, tmp_path):
    seeded(registry)
    registry.batch_query(["grimes"], at=T0 + 1)
    reopened = ConsentRegistry(tmp_path / "registry.jsonl")
    assert len(reopened.audits) == 1
    assert reopened.audits[0].entity_ids == ("grimes",)


# --- replay -----------------------------------------------------------------

def test_replay_reproduces_state(registry, tmp_path):
    seeded(registry)
    registry.upsert_consent("grimes", [VOICE_RULE], WINDOW, credential=SECRET, at=T0)
    registry.revoke_consent("grimes", credential=SECRET, at=T0 + 10)

    reopened = ConsentRegistry(tmp_path / "registry.jsonl")
    assert reopened.get_entity("grimes") == registry.get_entity("grimes")
    assert reopened.consent_history("grimes") == registry.consent_history("grimes")
    assert reopened.identify_holder(SECRET) == "rh-a"


def test_event_lines_are_canonical_json(registry, tmp_path):
    seeded(registry)
    for line in (tmp_path / "registry.jsonl").read_text().splitlines():
        doc = json.loads(line)
        assert set(doc) == {"seq", "kind", "at", "payload"}
        assert json.dumps(doc, sort_keys=True, separators=(",", ":"),
                          ensure_ascii=False) == line


def test_seq_is_contiguous(registry, tmp_path):
    seeded(registry)
    registry.upsert_consent("grimes", [VOICE_RULE], WINDOW, credential=SECRET, at=T0)
    seqs = [json.loads(line)["seq"]
            for line in (tmp_path / "registry.jsonl").read_text().splitlines()]
    assert seqs == list(range(len(seqs)))


# --- reports ----------------------------------------------------------------

def test_report_requires_own_credential(registry):
    seeded(registry)
    registry.add_rights_holder("rh-b", "Holder B", "other-secret", at=T0)
    with pytest.raises(Unauthorized):
        registry.rights_holder_report("rh-a", credential="other-secret")


def test_report_counts_only_own_queries(registry):
    seeded(registry)
    registry.add_rights_holder("rh-b", "B", "other-secret", at=T0)
    registry.register_entity(
        EntityRecord(entity_id="other", entity_type="person", display_name="Other",
                     rights_holder_ids=frozenset({"rh-b"})),
        credential="other-secret", at=T0)
    registry.batch_query(["grimes"], at=T0 + 1)
    registry.batch_query(["other"], at=T0 + 2)
    registry.batch_query(["grimes", "other"], at=T0 + 3)

    report = registry.rights_holder_report("rh-a", credential=SECRET)
    assert len(report["queries"]) == 2
    assert [e["entity_id"] for e in report["entities"]] == ["grimes"]


def test_report_time_range_half_open(registry):
    seeded(registry)
    for i in range(4):
        registry.batch_query(["grimes"], at=T0 + i)
    report = registry.rights_holder_report("rh-a", credential=SECRET,
                                           from_ts=T0 + 1, until=T0 + 3)
    assert [q["at"] for q in report["queries"]] == [T0 + 1, T0 + 2]


def test_report_includes_consent_history(registry):
    seeded(registry)
    registry.upsert_consent("grimes", [VOICE_RULE], WINDOW, credential=SECRET, at=T0)
    report = registry.rights_holder_report("rh-a", credential=SECRET)
    entity = report["entities"][0]
    assert entity["consent"]["version"] == 1
    assert entity["history"] == [{"version": 1, "status": "active",
                                  "updated_at": T0}]


def test_report_includes_ledger_entries(registry):
    seeded(registry)
    registry.upsert_consent("grimes", [VOICE_RULE], WINDOW, credential=SECRET, at=T0)
    report = registry.rights_holder_report("rh-a", credential=SECRET)
    kinds = [e["kind"] for e in report["ledger_entries"]]
    assert kinds == ["consent_change"]


# --- export and restore -----------------------------------------------------

def test_export_restore_round_trip(registry, tmp_path):
    seeded(registry)
    original = registry.upsert_consent("grimes", [VOICE_RULE], WINDOW,
                                       credential=SECRET, at=T0)
    out = tmp_path / "export"
    written = registry.export_consent_documents(out)
    assert [p.name for p in written] == ["grimes.json"]

    doc = json.loads(written[0].read_text())
    restored = registry.restore_consent_document(doc, at=T0 + 50)
    assert restored.version == original.version + 1
    assert restored.rules == original.rules
    assert restored.status == "active"


def test_restore_unknown_entity(registry):
    seeded(registry)
    with pytest.raises(UnknownEntity):
        registry.restore_consent_document(
            {"entity_id": "ghost", "rights_holder_id": "rh-a",
             "version": 1, "status": "active", "validity": None,
             "rules": [], "updated_at": T0})
