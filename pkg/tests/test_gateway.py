import base64
import warnings

import pytest

warnings.filterwarnings("ignore", category=DeprecationWarning)

from fastapi.testclient import TestClient  # noqa: E402

from consentry.gateway import AppState, GatewayConfig, create_app  # noqa: E402
from consentry.scenarios import (  # noqa: E402
    DENY_PROMPT,
    GRANT_ATTACHMENT,
    GRANT_PROMPT,
    HOLDER_ID,
    HOLDER_SECRET,
    T0,
    seed_grimes_fixture,
)

AT = T0 + 60


@pytest.fixture
def harness(tmp_path):
    state = AppState(GatewayConfig(state_dir=str(tmp_path)))
    app = create_app(state=state)
    with TestClient(app, raise_server_exceptions=False) as client:
        yield client, state


@pytest.fixture
def client(harness):
    return harness[0]


@pytest.fixture
def seeded(harness):
    client, state = harness
    seed_grimes_fixture(state.registry)
    return client


def err_code(response):
    return response.json()["error"]["code"]


# --- verify -----------------------------------------------------------------

def test_verify_denied_is_200(seeded):
    response = seeded.post("/v1/verify", json={"prompt": DENY_PROMPT, "at": AT})
    assert response.status_code == 200
    doc = response.json()
    assert doc["verdict"]["overall"] == "denied"
    assert doc["grant"] is None
    reasons = {v["name"]: v.get("reason") for v in doc["verdict"]["entity_verdicts"]}
    assert reasons == {"Rolling in the Deep": "not_in_registry",
                       "Grimes": "role_not_permitted"}


def test_verify_granted_returns_grant(seeded):
    response = seeded.post("/v1/verify", json={
        "prompt": GRANT_PROMPT,
        "attachment_b64": base64.b64encode(GRANT_ATTACHMENT).decode(),
        "at": AT,
    })
    doc = response.json()
    assert doc["verdict"]["overall"] == "granted"
    assert [e["entity_id"] for e in doc["grant"]["entities"]] == ["grimes"]
    assert doc["grant"]["compensation_eligible"] == ["rh-grimes"]


def test_verify_matches_core_engine_on_denial(harness):
    client, state = harness
    seed_grimes_fixture(state.registry)
    api_doc = client.post("/v1/verify",
                          json={"prompt": DENY_PROMPT, "at": AT}).json()
    core = state.engine.verify(prompt=DENY_PROMPT, at=AT)
    assert api_doc["verdict"] == core.to_doc()["verdict"]
    assert api_doc["request_digest"] == core.request_digest


def test_verify_structured_intent(seeded):
    intent = {"version": 1,
              "descriptors": [{"kind": "original", "aspect": "whole",
                               "payload_digest": "ab" * 32}],
              "transformations": [], "qualifiers": []}
    response = seeded.post("/v1/verify", json={"intent": intent, "at": AT})
    assert response.json()["verdict"]["overall"] == "granted"


def test_verify_empty_body_is_400(client):
    response = client.post("/v1/verify", json={})
    assert response.status_code == 400
    assert err_code(response) == "EmptyInput"


def test_verify_both_inputs_rejected(client):
    response = client.post("/v1/verify",
                           json={"prompt": "x", "intent": {"version": 1}})
    assert response.status_code == 400
    assert err_code(response) == "SchemaViolation"


def test_verify_bad_base64(client):
    response = client.post("/v1/verify",
                           json={"prompt": GRANT_PROMPT, "attachment_b64": "!!!"})
    assert response.status_code == 400


def test_verify_unparseable_prompt_is_400(client):
    response = client.post("/v1/verify", json={"prompt": "make something cool"})
    assert response.status_code == 400
    assert err_code(response) == "UnrecognizedPattern"


def test_verify_invalid_request_carries_violations(client):
    intent = {"version": 1, "descriptors": [], "transformations": [],
              "qualifiers": []}
    response = client.post("/v1/verify", json={"intent": intent})
    assert response.status_code == 400
    body = response.json()["error"]
    assert body["code"] == "InvalidRequest"
    assert body["violations"][0]["code"] == "MissingDescriptor"


# --- accounts and entities --------------------------------------------------

def seed_via_api(client):
    assert client.post("/v1/rights-holders", json={
        "rights_holder_id": "rh-x", "display_name": "X",
        "credential": "secret-x", "at": T0}).status_code == 201
    assert client.post("/v1/entities", json={
        "entity_id": "artist-x", "entity_type": "person",
        "display_name": "Artist X", "rights_holder_ids": ["rh-x"],
        "credential": "secret-x", "at": T0}).status_code == 201


def test_account_and_entity_flow(client):
    seed_via_api(client)
    listed = client.get("/v1/entities").json()["entities"]
    assert [e["entity_id"] for e in listed] == ["artist-x"]
    assert listed[0]["aliases"] == ["artist x"]


def test_duplicate_holder_is_409(client):
    seed_via_api(client)
    response = client.post("/v1/rights-holders", json={
        "rights_holder_id": "rh-x", "display_name": "X", "credential": "s"})
    assert response.status_code == 409
    assert err_code(response) == "DuplicateRightsHolder"


def test_entity_with_wrong_credential_is_401(client):
    seed_via_api(client)
    response = client.post("/v1/entities", json={
        "entity_id": "other", "entity_type": "person", "display_name": "Other",
        "rights_holder_ids": ["rh-x"], "credential": "wrong"})
    assert response.status_code == 401


# --- consent lifecycle over HTTP -------------------------------------------

RULE_DOC = {"aspect": "voice", "roles": ["descriptor"],
            "combination": "original_only"}


def test_consent_put_get_delete(client):
    seed_via_api(client)
    put = client.put("/v1/entities/artist-x/consent", json={
        "rules": [RULE_DOC], "validity": {"from": T0}, "at": T0,
        "credential": "secret-x"})
    assert put.status_code == 200
    assert put.json()["version"] == 1

    got = client.get("/v1/entities/artist-x/consent", params={"at": T0 + 5})
    doc = got.json()
    assert doc["consent"]["version"] == 1
    assert doc["history"] == [{"version": 1, "status": "active", "updated_at": T0}]

    deleted = client.delete("/v1/entities/artist-x/consent",
                            params={"at": T0 + 10, "credential": "secret-x"})
    assert deleted.status_code == 200
    assert deleted.json()["status"] == "revoked"

    again = client.delete("/v1/entities/artist-x/consent",
                          params={"credential": "secret-x"})
    assert again.status_code == 409
    assert err_code(again) == "AlreadyRevoked"


def test_consent_on_unknown_entity_is_404(client):
    response = client.get("/v1/entities/ghost/consent")
    assert response.status_code == 404
    assert err_code(response) == "UnknownEntity"


def test_malformed_rule_is_422(client):
    seed_via_api(client)
    response = client.put("/v1/entities/artist-x/consent", json={
        "rules": [{"aspect": "voice", "roles": [], "combination": "any"}],
        "validity": {"from": T0}, "at": T0, "credential": "secret-x"})
    assert response.status_code == 422
    assert err_code(response) == "MalformedRule"


def test_bearer_header_carries_credential(client):
    seed_via_api(client)
    response = client.put(
        "/v1/entities/artist-x/consent",
        json={"rules": [RULE_DOC], "validity": {"from": T0}, "at": T0},
        headers={"Authorization": "Bearer secret-x"})
    assert response.status_code == 200


# --- reports ----------------------------------------------------------------

def test_report_counts_queries(seeded):
    for _ in range(2):
        seeded.post("/v1/verify", json={"prompt": DENY_PROMPT, "at": AT})
    report = seeded.get(f"/v1/reports/{HOLDER_ID}",
                        params={"credential": HOLDER_SECRET}).json()
    assert len(report["queries"]) == 2
    assert report["entities"][0]["entity_id"] == "grimes"


def test_report_bad_range_is_400(seeded):
    response = seeded.get(f"/v1/reports/{HOLDER_ID}",
                          params={"credential": HOLDER_SECRET,
                                  "from": 10, "until": 5})
    assert response.status_code == 400


def test_report_needs_credential(seeded):
    response = seeded.get(f"/v1/reports/{HOLDER_ID}")
    assert response.status_code == 401


# --- grants and dissemination ----------------------------------------------

def test_dissemination_flow(seeded):
    grant = seeded.post("/v1/verify", json={
        "prompt": GRANT_PROMPT,
        "attachment_b64": base64.b64encode(GRANT_ATTACHMENT).decode(),
        "at": AT}).json()["grant"]
    response = seeded.post(f"/v1/grants/{grant['grant_id']}/disseminations",
                           json={"platform": "instagram", "purpose": "personal",
                                 "at": AT + 5})
    doc = response.json()
    assert doc["outcome"] == "allowed"
    assert doc["entry"]["kind"] == "dissemination"


def test_dissemination_unknown_grant_is_404(client):
    response = client.post("/v1/grants/ghost/disseminations",
                           json={"platform": "instagram", "purpose": "personal"})
    assert response.status_code == 404
    assert err_code(response) == "UnknownGrant"


# --- ledger -----------------------------------------------------------------

def test_ledger_verify_endpoint(seeded):
    seeded.post("/v1/verify", json={"prompt": DENY_PROMPT, "at": AT})
    doc = seeded.get("/v1/ledger/verify").json()
    assert doc["ok"] is True
    assert doc["first_bad_seq"] is None
    assert doc["entries"] == 2  # consent seed + one verification


# --- ingest -----------------------------------------------------------------

def test_ingest_tdm_endpoint(client):
    seed_via_api(client)
    response = client.post("/v1/ingest/tdm", json={
        "document": [{"location": "/music", "tdm-reservation": 0}],
        "entity_id": "artist-x", "rights_holder_id": "rh-x",
        "credential": "secret-x", "at": T0})
    doc = response.json()
    assert doc["record"]["rules"][0]["aspect"] == "any"
    assert doc["declarations"][0]["scope"] == "/music"


def test_ingest_ai_prefs_syntax_error_carries_line(client):
    seed_via_api(client)
    response = client.post("/v1/ingest/ai-prefs", json={
        "text": "Path: /x\nOutput allow\n",
        "entity_id": "artist-x", "rights_holder_id": "rh-x",
        "credential": "secret-x"})
    assert response.status_code == 400
    assert response.json()["error"]["line"] == 2


def test_ingest_unknown_format(client):
    response = client.post("/v1/ingest/robots", json={"text": ""})
    assert response.status_code == 400


def test_ingest_holder_mismatch_is_401(client):
    seed_via_api(client)
    client.post("/v1/rights-holders", json={
        "rights_holder_id": "rh-y", "display_name": "Y",
        "credential": "secret-y", "at": T0})
    response = client.post("/v1/ingest/tdm", json={
        "document": [{"location": "/m", "tdm-reservation": 1}],
        "entity_id": "artist-x", "rights_holder_id": "rh-x",
        "credential": "secret-y"})
    assert response.status_code == 401
