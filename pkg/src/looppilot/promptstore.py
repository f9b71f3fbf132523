"""A local, file-backed library of prompt/dialogue examples.

The store is a directory designed to live in version control: one JSON
document per entry, a votes ledger, and a config file naming the allowed
categories.  Entries are deduplicated by a content hash of the canonicalized
dialogue (whitespace-only differences hash identically), votes are one per
(entry, voter) with revoting replacing the old vote, and scores are always
recomputed from the ledger so nothing can drift.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

from .errors import BadCategory, DuplicateContent, FormatError, StoreLocked, UnknownEntry
from .gateway import ChatMessage, Transcript

DEFAULT_CATEGORIES = ("navigation", "grasping", "manipulation", "aerial")


def canonicalize_dialogue(messages) -> str:
    parts = []
    for m in messages:
        content = m.content.replace("\r\n", "\n").replace("\r", "\n")
        content = "\n".join(line.rstrip() for line in content.split("\n")).strip("\n")
        parts.append(f"{m.role}\x1f{content}")
    return "\x1e".join(parts)


def content_hash(messages) -> str:
    return hashlib.sha256(canonicalize_dialogue(messages).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class PromptEntry:
    id: str
    category: str
    title: str
    dialogue: Transcript
    tags: tuple[str, ...] = ()
    score: int = 0
    created_at: float = 0.0
    content_hash: str = ""

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "category": self.category,
            "title": self.title,
            "dialogue": [m.to_dict() for m in self.dialogue.messages],
            "tags": list(self.tags),
            "created_at": self.created_at,
            "content_hash": self.content_hash,
        }


@dataclass(frozen=True)
class VoteRecord:
    entry_id: str
    voter: str
    delta: int
    timestamp: float

    def to_dict(self) -> dict:
        return {
            "entry_id": self.entry_id,
            "voter": self.voter,
            "delta": self.delta,
            "timestamp": self.timestamp,
        }


class _Lock:
    """Advisory single-writer lock on the store directory."""

    def __init__(self, root: Path, timeout_s: float = 5.0):
        self.path = root / "store.lock"
        self.timeout_s = timeout_s
        self._fd = None

    def __enter__(self):
        deadline = time.monotonic() + self.timeout_s
        while True:
            try:
                self._fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
                os.write(self._fd, str(os.getpid()).encode())
                return self
            except FileExistsError:
                if time.monotonic() > deadline:
                    raise StoreLocked(f"another writer holds {self.path}")
                time.sleep(0.02)

    def __exit__(self, *_):
        if self._fd is not None:
            os.close(self._fd)
            self._fd = None
        try:
            self.path.unlink()
        except FileNotFoundError:
            pass


class PromptStore:
    def __init__(self, root: str | Path, categories=None, clock=time.time):
        self.root = Path(root)
        self.entries_dir = self.root / "entries"
        self.votes_path = self.root / "votes.jsonl"
        self.config_path = self.root / "store.json"
        self.clock = clock
        self.root.mkdir(parents=True, exist_ok=True)
        self.entries_dir.mkdir(exist_ok=True)
        if self.config_path.exists():
            config = json.loads(self.config_path.read_text(encoding="utf-8"))
            self.categories = tuple(config["categories"])
            if categories is not None and tuple(categories) != self.categories:
                raise BadCategory("store already configured with different categories")
        else:
            self.categories = tuple(categories or DEFAULT_CATEGORIES)
            self.config_path.write_text(
                json.dumps({"categories": list(self.categories)}, indent=2) + "\n",
                encoding="utf-8",
            )

    # --- persistence ---

    def _entry_path(self, entry_id: str) -> Path:
        return self.entries_dir / f"{entry_id}.json"

    def _load_entries(self) -> dict[str, dict]:
        out = {}
        for path in sorted(self.entries_dir.glob("*.json")):
            out[path.stem] = json.loads(path.read_text(encoding="utf-8"))
        return out

    def _load_votes(self) -> list[VoteRecord]:
        if not self.votes_path.exists():
            return []
        records = []
        for i, line in enumerate(self.votes_path.read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            try:
                records.append(VoteRecord(**json.loads(line)))
            except (json.JSONDecodeError, TypeError) as exc:
                raise FormatError(f"votes line {i}: {exc}")
        return records

    def _effective_votes(self) -> dict[tuple[str, str], VoteRecord]:
        effective: dict[tuple[str, str], VoteRecord] = {}
        for rec in self._load_votes():
            key = (rec.entry_id, rec.voter)
            prior = effective.get(key)
            if prior is None or rec.timestamp >= prior.timestamp:
                effective[key] = rec
        return effective

    def _scores(self) -> dict[str, int]:
        scores: dict[str, int] = {}
        for rec in self._effective_votes().values():
            scores[rec.entry_id] = scores.get(rec.entry_id, 0) + rec.delta
        return scores

    def _hydrate(self, raw: dict, score: int) -> PromptEntry:
        messages = tuple(ChatMessage(**m) for m in raw["dialogue"])
        return PromptEntry(
            id=raw["id"],
            category=raw["category"],
            title=raw["title"],
            dialogue=Transcript(messages, {"store_entry": raw["id"]}),
            tags=tuple(raw.get("tags", ())),
            score=score,
            created_at=raw["created_at"],
            content_hash=raw["content_hash"],
        )

    # --- operations ---

    def add(
        self,
        category: str,
        title: str,
        dialogue: Transcript | list[ChatMessage],
        tags=(),
        entry_id: str | None = None,
        created_at: float | None = None,
    ) -> str:
        if category not in self.categories:
            raise BadCategory(f"{category!r} is not one of {self.categories}")
        messages = dialogue.messages if isinstance(dialogue, Transcript) else tuple(dialogue)
        if not messages:
            raise FormatError("dialogue must be non-empty")
        digest = content_hash(messages)
        with _Lock(self.root):
            for raw in self._load_entries().values():
                if raw["category"] == category and raw["content_hash"] == digest:
                    raise DuplicateContent(f"identical dialogue already stored as {raw['id']}")
            if entry_id is None:
                entry_id = hashlib.sha256(f"{category}:{digest}".encode()).hexdigest()[:16]
            entry = PromptEntry(
                id=entry_id,
                category=category,
                title=title,
                dialogue=Transcript(messages) if not isinstance(dialogue, Transcript) else dialogue,
                tags=tuple(tags),
                created_at=self.clock() if created_at is None else created_at,
                content_hash=digest,
            )
            self._entry_path(entry_id).write_text(
                json.dumps(entry.to_dict(), indent=2, ensure_ascii=False) + "\n",
                encoding="utf-8",
            )
        return entry_id

    def vote(self, entry_id: str, delta: int, voter: str) -> int:
        if delta not in (1, -1):
            raise FormatError("vote delta must be +1 or -1")
        with _Lock(self.root):
            if not self._entry_path(entry_id).exists():
                raise UnknownEntry(f"no entry {entry_id!r}")
            rec = VoteRecord(entry_id, voter, delta, self.clock())
            with self.votes_path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(rec.to_dict()) + "\n")
        return self._scores().get(entry_id, 0)

    def get(self, entry_id: str) -> PromptEntry:
        path = self._entry_path(entry_id)
        if not path.exists():
            raise UnknownEntry(f"no entry {entry_id!r}")
        raw = json.loads(path.read_text(encoding="utf-8"))
        return self._hydrate(raw, self._scores().get(entry_id, 0))

    def list(self, category: str | None = None) -> list[PromptEntry]:
        """Entries ordered by score descending, ties broken oldest-first."""
        scores = self._scores()
        entries = [
            self._hydrate(raw, scores.get(raw["id"], 0))
            for raw in self._load_entries().values()
            if category is None or raw["category"] == category
        ]
        entries.sort(key=lambda e: (-e.score, e.created_at, e.id))
        return entries

    def audit_scores(self) -> bool:
        """Recompute every score from the vote ledger; always true by design."""
        recomputed = self._scores()
        return all(e.score == recomputed.get(e.id, 0) for e in self.list())

    # --- import/export ---

    def export(self, path: str | Path) -> int:
        entries = self._load_entries()
        doc = {
            "categories": list(self.categories),
            "entries": [entries[k] for k in sorted(entries)],
            "votes": [r.to_dict() for r in self._load_votes()],
        }
        Path(path).write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
        return len(doc["entries"])

    def import_file(self, path: str | Path) -> int:
        """Merge an export; idempotent by content hash, votes last-write-wins."""
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise FormatError(f"line {exc.lineno}: {exc.msg}")
        if not isinstance(doc, dict) or "entries" not in doc:
            raise FormatError("line 1: not a store export document")
        added = 0
        existing_hashes = {
            (raw["category"], raw["content_hash"]) for raw in self._load_entries().values()
        }
        for raw in doc["entries"]:
            try:
                key = (raw["category"], raw["content_hash"])
                if key in existing_hashes:
                    continue
                if raw["category"] not in self.categories:
                    raise BadCategory(f"{raw['category']!r} is not configured here")
                messages = [ChatMessage(**m) for m in raw["dialogue"]]
                self.add(
                    raw["category"],
                    raw["title"],
                    messages,
                    tags=raw.get("tags", ()),
                    entry_id=raw["id"],
                    created_at=raw["created_at"],
                )
                existing_hashes.add(key)
                added += 1
            except (KeyError, TypeError, ValueError) as exc:
                raise FormatError(f"entry {raw.get('id', '?')}: {exc}")
        incoming = doc.get("votes", [])
        if incoming:
            effective = self._effective_votes()
            known_ids = set(self._load_entries())
            with _Lock(self.root):
                with self.votes_path.open("a", encoding="utf-8") as fh:
                    for raw_vote in incoming:
                        try:
                            rec = VoteRecord(**raw_vote)
                        except TypeError as exc:
                            raise FormatError(f"vote record: {exc}")
                        if rec.entry_id not in known_ids:
                            continue
                        prior = effective.get((rec.entry_id, rec.voter))
                        if prior is not None and prior.timestamp >= rec.timestamp:
                            continue
                        effective[(rec.entry_id, rec.voter)] = rec
                        fh.write(json.dumps(rec.to_dict()) + "\n")
        return added
