"""Command line for the consent registry and verification engine.

Every gateway endpoint has a matching subcommand operating directly on
the state directory, so scripted replays do not need a running server.
Exit codes: 0 success, 1 denied verdict or scenario deviation or failed
ledger check, 2 usage and domain errors.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click

from .consent import ValidityWindow, record_to_doc, rule_from_doc
from .errors import ConsentryError
from .gateway import AppState, GatewayConfig, create_app, load_config
from .ingest import (
    declarations_to_consent,
    import_ai_preferences_text,
    import_tdm_document,
)
from .registry import EntityRecord, entity_to_doc
from .scenarios import run_scenario


def _domain_errors(f):
    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except ConsentryError as exc:
            click.echo(f"error [{exc.code}]: {exc}", err=True)
            sys.exit(2)
    return wrapper


@click.group()
@click.option("--registry", "state_dir", default=None, metavar="DIR",
              help="State directory holding the registry event log and ledger.")
@click.option("--at", type=int, default=None, metavar="TS",
              help="Timestamp for deterministic replays (UTC seconds).")
@click.pass_context
def main(ctx, state_dir, at):
    ctx.ensure_object(dict)
    ctx.obj["state_dir"] = state_dir
    ctx.obj["at"] = at


def _state(ctx) -> AppState:
    config = load_config()
    if ctx.obj.get("state_dir"):
        config = GatewayConfig(listen=config.listen,
                               state_dir=ctx.obj["state_dir"])
    return AppState(config)


def _at(ctx) -> int | None:
    return ctx.obj.get("at")


# --- verification -----------------------------------------------------------

@main.command()
@click.argument("prompt", required=False)
@click.option("--intent-file", type=click.Path(), default=None,
              help="Structured intent document ('-' for stdin).")
@click.option("--attachment", type=click.Path(exists=True), default=None,
              help="File the prompt's 'this <medium>' refers to.")
@click.option("--attachment-digest", default=None)
@click.option("--json", "as_json", is_flag=True, help="Print the full outcome document.")
@click.pass_context
@_domain_errors
def verify(ctx, prompt, intent_file, attachment, attachment_digest, as_json):
    """Verify a prompt or structured intent; exit 1 when denied."""
    if (prompt is None) == (intent_file is None):
        raise click.UsageError("provide a PROMPT or --intent-file, not both")
    intent = None
    if intent_file is not None:
        text = sys.stdin.read() if intent_file == "-" else Path(intent_file).read_text()
        intent = json.loads(text)
    payload = Path(attachment).read_bytes() if attachment else None

    state = _state(ctx)
    outcome = state.engine.verify(prompt=prompt, intent=intent,
                                  attachment=payload,
                                  attachment_digest=attachment_digest,
                                  at=_at(ctx))
    if as_json:
        click.echo(json.dumps(outcome.to_doc(), indent=2, sort_keys=True))
    else:
        click.echo(f"overall: {outcome.verdict.overall}")
        for v in outcome.verdict.entity_verdicts:
            reason = f" ({v.reason})" if v.reason else ""
            click.echo(f"  {v.subject}: {v.outcome}{reason}")
        for s in outcome.guidance:
            click.echo(f"  guidance [{s.suggestion_kind}] {s.target}: {s.text}")
        if outcome.grant is not None:
            click.echo(f"grant: {outcome.grant.grant_id}")
    sys.exit(0 if outcome.verdict.overall == "granted" else 1)


# --- consent ----------------------------------------------------------------

@main.group()
def consent():
    """Manage consent records."""


@consent.command("set")
@click.argument("entity_id")
@click.option("--rules", "rules_json", default=None,
              help="Rule documents as a JSON list.")
@click.option("--rules-file", type=click.Path(exists=True), default=None)
@click.option("--valid-from", type=int, default=None)
@click.option("--valid-until", type=int, default=None)
@click.option("--credential", required=True)
@click.pass_context
@_domain_errors
def consent_set(ctx, entity_id, rules_json, rules_file, valid_from, valid_until,
                credential):
    if rules_json is None and rules_file is None:
        raise click.UsageError("provide --rules or --rules-file")
    text = rules_json if rules_json is not None else Path(rules_file).read_text()
    try:
        docs = json.loads(text)
    except json.JSONDecodeError as exc:
        raise click.UsageError(f"rules are not valid JSON: {exc}")
    state = _state(ctx)
    at = _at(ctx)
    if valid_from is None:
        import time
        valid_from = at if at is not None else int(time.time())
    record = state.registry.upsert_consent(
        entity_id,
        tuple(rule_from_doc(d) for d in docs),
        ValidityWindow(from_ts=valid_from, until=valid_until),
        credential, at=at,
    )
    click.echo(f"{entity_id}: version {record.version} ({len(record.rules)} rules)")


@consent.command("revoke")
@click.argument("entity_id")
@click.option("--credential", required=True)
@click.pass_context
@_domain_errors
def consent_revoke(ctx, entity_id, credential):
    state = _state(ctx)
    record = state.registry.revoke_consent(entity_id, credential, at=_at(ctx))
    click.echo(f"{entity_id}: revoked at version {record.version}")


@consent.command("show")
@click.argument("entity_id")
@click.pass_context
@_domain_errors
def consent_show(ctx, entity_id):
    import time
    state = _state(ctx)
    state.registry.get_entity(entity_id)
    at = _at(ctx)
    record = state.registry.lookup_consent(
        entity_id, at if at is not None else int(time.time()))
    if record is None:
        click.echo(f"{entity_id}: no consent record (defaults to denied)")
        return
    click.echo(json.dumps(record_to_doc(record), indent=2, sort_keys=True))


# --- entities and rights holders --------------------------------------------

@main.group()
def entity():
    """Manage registered entities."""


@entity.command("add")
@click.option("--id", "entity_id", required=True)
@click.option("--type", "entity_type", required=True,
              type=click.Choice(["person", "group", "work", "work_part"]))
@click.option("--name", "display_name", required=True)
@click.option("--alias", "aliases", multiple=True)
@click.option("--parent", default=None)
@click.option("--holder", "holders", multiple=True, required=True,
              help="Rights holder id (repeatable).")
@click.option("--credential", required=True)
@click.pass_context
@_domain_errors
def entity_add(ctx, entity_id, entity_type, display_name, aliases, parent,
               holders, credential):
    state = _state(ctx)
    state.registry.register_entity(EntityRecord(
        entity_id=entity_id, entity_type=entity_type,
        display_name=display_name, aliases=frozenset(aliases),
        parent_entity=parent, rights_holder_ids=frozenset(holders),
    ), credential, at=_at(ctx))
    click.echo(json.dumps(entity_to_doc(state.registry.get_entity(entity_id)),
                          indent=2, sort_keys=True))


@main.group()
def holder():
    """Manage rights holder accounts."""


@holder.command("add")
@click.option("--id", "rights_holder_id", required=True)
@click.option("--name", "display_name", required=True)
@click.option("--credential", required=True,
              help="Bearer secret; only its digest is stored.")
@click.pass_context
@_domain_errors
def holder_add(ctx, rights_holder_id, display_name, credential):
    state = _state(ctx)
    account = state.registry.add_rights_holder(rights_holder_id, display_name,
                                               credential, at=_at(ctx))
    click.echo(f"rights holder {account.rights_holder_id} created")


# --- reports ----------------------------------------------------------------

@main.command()
@click.option("--as", "rights_holder_id", required=True, metavar="HOLDER")
@click.option("--credential", required=True)
@click.option("--from", "from_ts", type=int, default=None)
@click.option("--until", type=int, default=None)
@click.pass_context
@_domain_errors
def report(ctx, rights_holder_id, credential, from_ts, until):
    """Transparency report for a rights holder."""
    state = _state(ctx)
    doc = state.registry.rights_holder_report(rights_holder_id, credential,
                                              from_ts=from_ts, until=until)
    click.echo(json.dumps(doc, indent=2, sort_keys=True))


# --- scenarios, ledger, ingest ----------------------------------------------

@main.command()
@click.argument("name")
@click.option("--state-dir", default=None,
              help="Persist the scenario's registry and ledger here.")
@_domain_errors
def scenario(name, state_dir):
    """Run a named reference scenario; exit 1 on any deviation."""
    result = run_scenario(name, state_dir=state_dir)
    click.echo(result.transcript)
    sys.exit(0 if result.ok else 1)


@main.group()
def ledger():
    """Inspect the attribution ledger."""


@ledger.command("verify")
@click.pass_context
@_domain_errors
def ledger_verify(ctx):
    state = _state(ctx)
    ok, first_bad = state.ledger.verify_chain()
    if ok:
        click.echo(f"ledger intact ({len(state.ledger)} entries)")
        sys.exit(0)
    click.echo(f"ledger damaged: first bad entry at seq {first_bad}")
    sys.exit(1)


@main.command()
@click.argument("source_format", type=click.Choice(["tdm", "ai-prefs"]))
@click.argument("path", type=click.Path(exists=True))
@click.option("--entity", "entity_id", required=True)
@click.option("--as", "rights_holder_id", required=True, metavar="HOLDER")
@click.option("--credential", required=True)
@click.pass_context
@_domain_errors
def ingest(ctx, source_format, path, entity_id, rights_holder_id, credential):
    """Import a preference file into a consent record."""
    text = Path(path).read_text(encoding="utf-8")
    if source_format == "tdm":
        declarations = import_tdm_document(text)
    else:
        declarations = import_ai_preferences_text(text)
    state = _state(ctx)
    record = declarations_to_consent(declarations, entity_id, rights_holder_id,
                                     state.registry, credential, at=_at(ctx))
    kind = "1 any-aspect rule" if record.rules else "explicitly reserved (no rules)"
    click.echo(f"{entity_id}: imported {len(declarations)} declarations, "
               f"version {record.version}, {kind}")


@main.command()
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--listen", default=None, metavar="HOST:PORT")
@click.option("--static", "static_dir", type=click.Path(), default=None,
              help="Directory of console assets to serve at /.")
@click.pass_context
@_domain_errors
def serve(ctx, config_path, listen, static_dir):
    """Run the HTTP gateway."""
    import uvicorn

    config = load_config(config_path)
    if ctx.obj.get("state_dir"):
        config = GatewayConfig(listen=config.listen, state_dir=ctx.obj["state_dir"])
    if listen:
        config = GatewayConfig(listen=listen, state_dir=config.state_dir,
                               registry_path=config.registry_path,
                               ledger_path=config.ledger_path)
    if static_dir is None:
        default_static = Path("frontend/dist")
        static_dir = default_static if default_static.is_dir() else None
    app = create_app(config, static_dir=static_dir)
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")


if __name__ == "__main__":
    main()
