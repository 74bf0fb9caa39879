"""Append-only hash-chained ledger with a content-addressed payload store.

Each chain line is "seq at kind payload_digest prev_hash entry_hash".
The entry hash covers the five preceding fields, and each entry's
prev_hash is the previous entry's hash, so any byte flipped in the
stored file surfaces in verification as a first bad sequence number.
Payloads stay out of the chain computation; only their digests are
chained, and the files are checked against those digests.
"""

from __future__ import annotations

import json
import os
import re
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from .canonical import ZERO_DIGEST, canonical_json, sha256_hex
from .errors import StorageFailure

ENTRY_KINDS = frozenset({"verification", "generation", "dissemination", "consent_change"})

_HEX64 = re.compile(r"^[0-9a-f]{64}$")


@dataclass(frozen=True)
class LedgerEntry:
    seq: int
    at: int
    kind: str
    payload_digest: str
    prev_hash: str
    entry_hash: str

    def to_line(self) -> str:
        return (f"{self.seq} {self.at} {self.kind} "
                f"{self.payload_digest} {self.prev_hash} {self.entry_hash}")

    def to_doc(self) -> dict:
        return {
            "seq": self.seq, "at": self.at, "kind": self.kind,
            "payload_digest": self.payload_digest,
            "prev_hash": self.prev_hash, "entry_hash": self.entry_hash,
        }


def compute_entry_hash(seq: int, at: int, kind: str, payload_digest: str,
                       prev_hash: str) -> str:
    return sha256_hex(f"{seq} {at} {kind} {payload_digest} {prev_hash}".encode("utf-8"))


class LedgerStore:
    """Ledger rooted at a directory: chain.log plus payloads/<digest>.json.

    Appends are serialized and flushed to disk before returning;
    verification always re-reads the stored file so it sees exactly what
    a later reader would see.
    """

    def __init__(self, root):
        self.root = Path(root)
        self.chain_path = self.root / "chain.log"
        self.payload_dir = self.root / "payloads"
        self._lock = threading.Lock()
        self._entries: list[LedgerEntry] = []
        self._payload_cache: dict[str, dict] = {}
        self._corrupt = False
        try:
            self.payload_dir.mkdir(parents=True, exist_ok=True)
            if self.chain_path.exists():
                self._load()
        except OSError as exc:
            raise StorageFailure(f"cannot open ledger at {self.root}: {exc}") from exc

    def _load(self):
        for line in self.chain_path.read_text(encoding="utf-8").splitlines():
            entry = _parse_line(line)
            if entry is None:
                # Keep the readable prefix; refuse further appends so a
                # damaged chain is never silently extended.
                self._corrupt = True
                break
            self._entries.append(entry)

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def entries(self) -> tuple[LedgerEntry, ...]:
        return tuple(self._entries)

    def append_entry(self, kind: str, payload: dict, at: int | None = None) -> LedgerEntry:
        if kind not in ENTRY_KINDS:
            raise StorageFailure(f"unknown ledger entry kind {kind!r}")
        if self._corrupt:
            raise StorageFailure("ledger chain file is damaged; refusing to append")
        if at is None:
            at = int(time.time())
        with self._lock:
            payload_text = canonical_json(payload)
            digest = sha256_hex(payload_text.encode("utf-8"))
            seq = len(self._entries)
            prev = self._entries[-1].entry_hash if self._entries else ZERO_DIGEST
            entry = LedgerEntry(
                seq=seq, at=int(at), kind=kind, payload_digest=digest,
                prev_hash=prev,
                entry_hash=compute_entry_hash(seq, int(at), kind, digest, prev),
            )
            try:
                payload_path = self.payload_dir / f"{digest}.json"
                if not payload_path.exists():
                    payload_path.write_text(payload_text, encoding="utf-8")
                with open(self.chain_path, "a", encoding="utf-8") as fh:
                    fh.write(entry.to_line() + "\n")
                    fh.flush()
                    os.fsync(fh.fileno())
            except OSError as exc:
                raise StorageFailure(f"ledger append failed: {exc}") from exc
            self._entries.append(entry)
            self._payload_cache[digest] = json.loads(payload_text)
            return entry

    def verify_chain(self) -> tuple[bool, int | None]:
        """Re-read the stored chain and check every line.

        Returns (True, None) for an intact ledger (an empty one counts),
        otherwise (False, seq-of-first-bad-line).
        """
        try:
            text = self.chain_path.read_text(encoding="utf-8") if self.chain_path.exists() else ""
        except OSError as exc:
            raise StorageFailure(f"cannot read ledger chain: {exc}") from exc
        prev = ZERO_DIGEST
        for i, line in enumerate(text.splitlines()):
            entry = _parse_line(line)
            if entry is None or entry.seq != i or entry.prev_hash != prev:
                return False, i
            if compute_entry_hash(i, entry.at, entry.kind, entry.payload_digest,
                                  prev) != entry.entry_hash:
                return False, i
            payload_path = self.payload_dir / f"{entry.payload_digest}.json"
            try:
                stored = payload_path.read_bytes()
            except OSError:
                return False, i
            if sha256_hex(stored) != entry.payload_digest:
                return False, i
            prev = entry.entry_hash
        return True, None

    def read_payload(self, payload_digest: str) -> dict:
        if payload_digest in self._payload_cache:
            return self._payload_cache[payload_digest]
        path = self.payload_dir / f"{payload_digest}.json"
        try:
            payload = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise StorageFailure(f"payload {payload_digest} unreadable: {exc}") from exc
        self._payload_cache[payload_digest] = payload
        return payload

    def query_entries(self, kind: str | None = None, entity_id: str | None = None,
                      rights_holder_id: str | None = None,
                      from_ts: int | None = None,
                      until: int | None = None) -> list[tuple[LedgerEntry, dict]]:
        """Linear scan in seq order; filters are conjunctive.

        entity_id and rights_holder_id match against the payload's
        entity_ids / rights_holder_ids lists, which every payload
        written by this package carries. The time range is half-open.
        """
        out = []
        for entry in self._entries:
            if kind is not None and entry.kind != kind:
                continue
            if from_ts is not None and entry.at < from_ts:
                continue
            if until is not None and entry.at >= until:
                continue
            payload = self.read_payload(entry.payload_digest)
            if entity_id is not None and entity_id not in payload.get("entity_ids", []):
                continue
            if (rights_holder_id is not None
                    and rights_holder_id not in payload.get("rights_holder_ids", [])):
                continue
            out.append((entry, payload))
        return out


def _parse_line(line: str) -> LedgerEntry | None:
    fields = line.split(" ")
    if len(fields) != 6:
        return None
    seq_s, at_s, kind, payload_digest, prev_hash, entry_hash = fields
    if not (seq_s.isdigit() and (at_s.isdigit() or (at_s.startswith("-") and at_s[1:].isdigit()))):
        return None
    if kind not in ENTRY_KINDS:
        return None
    if not (_HEX64.match(payload_digest) and _HEX64.match(prev_hash)
            and _HEX64.match(entry_hash)):
        return None
    return LedgerEntry(seq=int(seq_s), at=int(at_s), kind=kind,
                       payload_digest=payload_digest, prev_hash=prev_hash,
                       entry_hash=entry_hash)
