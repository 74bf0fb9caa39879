import json

import pytest
from click.testing import CliRunner

from consentry.cli import main
from consentry.scenarios import (
    DENY_PROMPT,
    GRANT_ATTACHMENT,
    GRANT_PROMPT,
    HOLDER_SECRET,
    T0,
)

AT = T0 + 60
RULES_JSON = json.dumps([{"aspect": "voice", "roles": ["descriptor"],
                          "combination": "original_only"}])


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def state_dir(tmp_path):
    return str(tmp_path / "state")


def run(runner, state_dir, *argv, at=AT, input=None):
    args = ["--registry", state_dir]
    if at is not None:
        args += ["--at", str(at)]
    return runner.invoke(main, args + list(argv), input=input,
                         catch_exceptions=False)


def seed(runner, state_dir):
    result = run(runner, state_dir, "holder", "add", "--id", "rh-grimes",
                 "--name", "Grimes Estate", "--credential", HOLDER_SECRET,
                 at=T0)
    assert result.exit_code == 0, result.output
    result = run(runner, state_dir, "entity", "add", "--id", "grimes",
                 "--type", "person", "--name", "Grimes",
                 "--holder", "rh-grimes", "--credential", HOLDER_SECRET,
                 at=T0)
    assert result.exit_code == 0, result.output
    result = run(runner, state_dir, "consent", "set", "grimes",
                 "--rules", RULES_JSON, "--valid-from", str(T0),
                 "--credential", HOLDER_SECRET, at=T0)
    assert result.exit_code == 0, result.output


def test_verify_denied_exits_1(runner, state_dir):
    seed(runner, state_dir)
    result = run(runner, state_dir, "verify", DENY_PROMPT)
    assert result.exit_code == 1
    assert "overall: denied" in result.output
    assert "role_not_permitted" in result.output


def test_verify_granted_exits_0(runner, state_dir, tmp_path):
    seed(runner, state_dir)
    attachment = tmp_path / "take.wav"
    attachment.write_bytes(GRANT_ATTACHMENT)
    result = run(runner, state_dir, "verify", GRANT_PROMPT,
                 "--attachment", str(attachment))
    assert result.exit_code == 0, result.output
    assert "overall: granted" in result.output
    assert "grant: " in result.output


def test_verify_json_output(runner, state_dir):
    seed(runner, state_dir)
    result = run(runner, state_dir, "verify", DENY_PROMPT, "--json")
    doc = json.loads(result.output)
    assert doc["verdict"]["overall"] == "denied"


def test_verify_intent_from_stdin(runner, state_dir):
    seed(runner, state_dir)
    intent = json.dumps({"version": 1,
                         "descriptors": [{"kind": "original", "aspect": "whole",
                                          "payload_digest": "ab" * 32}],
                         "transformations": [], "qualifiers": []})
    result = run(runner, state_dir, "verify", "--intent-file", "-", input=intent)
    assert result.exit_code == 0, result.output


def test_verify_usage_error_exits_2(runner, state_dir):
    result = run(runner, state_dir, "verify")
    assert result.exit_code == 2


def test_verify_domain_error_exits_2(runner, state_dir):
    result = run(runner, state_dir, "verify", "make something cool")
    assert result.exit_code == 2
    assert "error [UnrecognizedPattern]" in result.output


def test_consent_show_and_revoke(runner, state_dir):
    seed(runner, state_dir)
    shown = run(runner, state_dir, "consent", "show", "grimes")
    assert "version" in shown.output

    revoked = run(runner, state_dir, "consent", "revoke", "grimes",
                  "--credential", HOLDER_SECRET)
    assert revoked.exit_code == 0

    again = run(runner, state_dir, "consent", "revoke", "grimes",
                "--credential", HOLDER_SECRET)
    assert again.exit_code == 2
    assert "AlreadyRevoked" in again.output


def test_consent_show_without_record(runner, state_dir):
    run(runner, state_dir, "holder", "add", "--id", "rh-a", "--name", "A",
        "--credential", "s", at=T0)
    run(runner, state_dir, "entity", "add", "--id", "e", "--type", "work",
        "--name", "E", "--holder", "rh-a", "--credential", "s", at=T0)
    result = run(runner, state_dir, "consent", "show", "e")
    assert result.exit_code == 0
    assert "no consent record" in result.output


def test_wrong_credential_exits_2(runner, state_dir):
    seed(runner, state_dir)
    result = run(runner, state_dir, "consent", "set", "grimes",
                 "--rules", RULES_JSON, "--valid-from", str(T0),
                 "--credential", "wrong")
    assert result.exit_code == 2
    assert "Unauthorized" in result.output


def test_report_counts_queries(runner, state_dir):
    seed(runner, state_dir)
    run(runner, state_dir, "verify", DENY_PROMPT)
    result = run(runner, state_dir, "report", "--as", "rh-grimes",
                 "--credential", HOLDER_SECRET)
    assert result.exit_code == 0
    doc = json.loads(result.output)
    assert len(doc["queries"]) == 1


def test_scenario_command(runner, tmp_path):
    result = CliRunner().invoke(main, ["scenario", "grimes-deny",
                                       "--state-dir", str(tmp_path / "s")],
                                catch_exceptions=False)
    assert result.exit_code == 0, result.output
    assert "expected outcome reproduced" in result.output


def test_scenario_unknown_exits_2(runner):
    result = runner.invoke(main, ["scenario", "nope"], catch_exceptions=False)
    assert result.exit_code == 2


def test_ledger_verify_intact_and_damaged(runner, state_dir, tmp_path):
    seed(runner, state_dir)
    run(runner, state_dir, "verify", DENY_PROMPT)
    ok = run(runner, state_dir, "ledger", "verify")
    assert ok.exit_code == 0
    assert "intact" in ok.output

    chain = tmp_path / "state" / "ledger" / "chain.log"
    lines = chain.read_text().splitlines()
    parts = lines[0].split(" ")
    parts[2] = "generation" if parts[2] != "generation" else "verification"
    lines[0] = " ".join(parts)
    chain.write_text("\n".join(lines) + "\n")

    damaged = run(runner, state_dir, "ledger", "verify")
    assert damaged.exit_code == 1
    assert "seq 0" in damaged.output


def test_ingest_command(runner, state_dir, tmp_path):
    seed(runner, state_dir)
    prefs = tmp_path / "prefs.txt"
    prefs.write_text("Path: /music\nOutput: allow\n")
    result = run(runner, state_dir, "ingest", "ai-prefs", str(prefs),
                 "--entity", "grimes", "--as", "rh-grimes",
                 "--credential", HOLDER_SECRET)
    assert result.exit_code == 0, result.output
    assert "1 any-aspect rule" in result.output


def test_ingest_tdm_reserved(runner, state_dir, tmp_path):
    seed(runner, state_dir)
    doc = tmp_path / "res.json"
    doc.write_text(json.dumps([{"location": "/all", "tdm-reservation": 1}]))
    result = run(runner, state_dir, "ingest", "tdm", str(doc),
                 "--entity", "grimes", "--as", "rh-grimes",
                 "--credential", HOLDER_SECRET)
    assert result.exit_code == 0
    assert "explicitly reserved" in result.output
