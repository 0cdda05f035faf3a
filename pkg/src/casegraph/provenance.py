"""Write-once, read-many provenance archive.

Every graph mutation and user action is sealed into a hash chain before it
becomes visible anywhere else. The log is newline-delimited JSON with
canonicalized field order (sorted keys, no insignificant whitespace), so the
chain is bit-exact across implementations. The first line of a log file is a
header fixing the digest algorithm.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, replace
from typing import Callable, Iterable

from casegraph.errors import ChainBrokenError, StorageError, UnknownItemError, ValidationError
from casegraph.schema import Actor

GENESIS_HASH = "0" * 64
LOG_HEADER = {"format": "casegraph-provenance", "version": 1, "digest": "sha256"}

MUTATION_KINDS = frozenset(
    {
        "create_node",
        "update_node",
        "create_edge",
        "update_edge",
        "hide",
        "review",
        "annotate",
        "ontology_edit",
        "ingest",
        "module_run",
        "clamp_grade",
        "search_executed",
    }
)


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def _digest(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class ProvenanceEntry:
    seq: int
    timestamp: float
    actor: Actor
    mutation: str
    payload: dict
    prev_hash: str
    entry_hash: str

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "timestamp": self.timestamp,
            "actor": self.actor.to_dict(),
            "mutation": self.mutation,
            "payload": self.payload,
            "prev_hash": self.prev_hash,
            "entry_hash": self.entry_hash,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ProvenanceEntry":
        return cls(
            seq=d["seq"],
            timestamp=d["timestamp"],
            actor=Actor.from_dict(d["actor"]),
            mutation=d["mutation"],
            payload=d["payload"],
            prev_hash=d["prev_hash"],
            entry_hash=d["entry_hash"],
        )

    def compute_hash(self) -> str:
        return _digest(
            {
                "seq": self.seq,
                "timestamp": self.timestamp,
                "actor": self.actor.to_dict(),
                "mutation": self.mutation,
                "payload": self.payload,
                "prev_hash": self.prev_hash,
            }
        )


class ProvenanceLog:
    """Append-only hash chain, optionally backed by an NDJSON file.

    Appends are serialized by the single-writer store; reads operate on the
    immutable prefix and need no locking.
    """

    def __init__(self, path: str | None = None, clock: Callable[[], float] = time.time):
        self.path = path
        self.clock = clock
        self.entries: list[ProvenanceEntry] = []
        self._fh = None
        if path is not None:
            existing = os.path.exists(path) and os.path.getsize(path) > 0
            if existing:
                self.entries = list(read_log_file(path))
            self._fh = open(path, "a", encoding="utf-8")
            if not existing:
                self._fh.write(canonical_json(LOG_HEADER) + "\n")
                self._fh.flush()
                os.fsync(self._fh.fileno())

    @property
    def head_hash(self) -> str:
        return self.entries[-1].entry_hash if self.entries else GENESIS_HASH

    def __len__(self) -> int:
        return len(self.entries)

    def append(self, actor: Actor, mutation: str, payload: dict) -> ProvenanceEntry:
        """Seal and durably store one entry; callers mutate state only after this returns."""
        if mutation not in MUTATION_KINDS:
            raise StorageError(f"unknown mutation kind {mutation!r}")
        try:
            canonical_json(payload)
        except (TypeError, ValueError) as exc:
            raise StorageError(f"payload not serializable: {exc}") from exc
        entry = ProvenanceEntry(
            seq=len(self.entries),
            timestamp=float(self.clock()),
            actor=actor,
            mutation=mutation,
            payload=payload,
            prev_hash=self.head_hash,
            entry_hash="",
        )
        entry = replace(entry, entry_hash=entry.compute_hash())
        if self._fh is not None:
            try:
                self._fh.write(canonical_json(entry.to_dict()) + "\n")
                self._fh.flush()
                os.fsync(self._fh.fileno())
            except OSError as exc:
                raise StorageError(f"provenance append failed: {exc}") from exc
        self.entries.append(entry)
        return entry

    def verify(self) -> int | None:
        """None if the chain is intact, else the first broken seq."""
        return verify_entries(self.entries)

    def entries_touching(self, ids: set[str]) -> list[ProvenanceEntry]:
        """All entries whose payload references any of the given ids."""
        return [e for e in self.entries if _payload_mentions(e.payload, ids)]

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


def verify_entries(entries: Iterable[ProvenanceEntry]) -> int | None:
    prev = GENESIS_HASH
    for i, entry in enumerate(entries):
        if entry.seq != i or entry.prev_hash != prev or entry.compute_hash() != entry.entry_hash:
            return i
        prev = entry.entry_hash
    return None


def read_log_file(path: str) -> list[ProvenanceEntry]:
    """Parse a log file, skipping the header line. Raises on unreadable lines."""
    entries = []
    with open(path, "rb") as fh:
        raw_lines = [line for line in fh.read().splitlines() if line.strip()]
    start = 0
    if raw_lines:
        try:
            first = json.loads(raw_lines[0].decode("utf-8"))
            if isinstance(first, dict) and first.get("format") == LOG_HEADER["format"]:
                start = 1
        except (json.JSONDecodeError, UnicodeDecodeError):
            pass
    for i, raw in enumerate(raw_lines[start:]):
        # a line that fails to decode or parse breaks the chain at its position
        try:
            entries.append(ProvenanceEntry.from_dict(json.loads(raw.decode("utf-8"))))
        except (json.JSONDecodeError, UnicodeDecodeError, KeyError, TypeError, ValueError, ValidationError) as exc:
            raise ChainBrokenError(i, f"unreadable entry: {exc}")
    return entries


def verify_log_file(path: str) -> int | None:
    """None if intact, else the first broken seq (by line position)."""
    try:
        entries = read_log_file(path)
    except ChainBrokenError as exc:
        return exc.seq
    return verify_entries(entries)


def trace_entries(log: ProvenanceLog, item_id: str, related_ids: set[str] | None = None) -> list[ProvenanceEntry]:
    """Chronological entries touching an item and its related ids.

    Related ids (source documents, module runs) are supplied by the caller,
    which knows the item's attributions.
    """
    ids = {item_id} | (related_ids or set())
    entries = log.entries_touching(ids)
    if not any(_payload_mentions(e.payload, {item_id}) for e in entries):
        raise UnknownItemError(f"no provenance for item {item_id!r}")
    return entries


def _payload_mentions(value, ids: set[str]) -> bool:
    if isinstance(value, str):
        return value in ids
    if isinstance(value, dict):
        return any(_payload_mentions(v, ids) for v in value.values())
    if isinstance(value, (list, tuple)):
        return any(_payload_mentions(v, ids) for v in value)
    return False
