"""JSONL dataset manifests: one utterance per line, UTF-8, order preserving.

Every pipeline stage reads and writes this one format. Unknown fields ride
along untouched so foreign tooling can annotate entries without us dropping
their keys on rewrite.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DuplicateIdError, InvalidFieldError, ParseError

__all__ = [
    "ORIGIN_LABELED",
    "ORIGIN_PSEUDO_A",
    "ORIGIN_PSEUDO_B",
    "ManifestEntry",
    "read_manifest",
    "write_manifest",
    "split_by_duration",
]

ORIGIN_LABELED = "labeled"
ORIGIN_PSEUDO_A = "pseudo_a"
ORIGIN_PSEUDO_B = "pseudo_b"
_ORIGINS = (ORIGIN_LABELED, ORIGIN_PSEUDO_A, ORIGIN_PSEUDO_B)

_KNOWN_FIELDS = ("id", "audio", "text", "duration_s", "speaker", "origin",
                 "iteration", "source_id", "span_s")


@dataclass
class ManifestEntry:
    """One utterance: audio location, transcript, and provenance."""

    id: str
    audio: str
    text: str
    duration_s: float
    speaker: str = ""
    origin: str = ORIGIN_LABELED
    iteration: int = 0
    source_id: str | None = None
    span_s: tuple[float, float] | None = None
    extra: dict = field(default_factory=dict)

    def validate(self, line_no: int | None = None) -> None:
        def bad(name, msg):
            raise InvalidFieldError(name, msg, line_no=line_no)

        if not self.id or not isinstance(self.id, str):
            bad("id", "must be a non-empty string")
        if not isinstance(self.audio, str) or not self.audio:
            bad("audio", "must be a non-empty path string")
        if not isinstance(self.text, str):
            bad("text", "must be a string")
        if not isinstance(self.duration_s, (int, float)) or self.duration_s <= 0:
            bad("duration_s", f"must be a positive number, got {self.duration_s!r}")
        if self.origin not in _ORIGINS:
            bad("origin", f"must be one of {_ORIGINS}, got {self.origin!r}")
        if not isinstance(self.iteration, int) or self.iteration < 0:
            bad("iteration", f"must be an integer >= 0, got {self.iteration!r}")
        if self.origin != ORIGIN_LABELED:
            # pseudo entries must say where they were cut from
            if not self.source_id:
                bad("source_id", f"required for origin {self.origin!r}")
            if self.span_s is None:
                bad("span_s", f"required for origin {self.origin!r}")
        if self.span_s is not None:
            start, end = self.span_s
            if not 0 <= start < end:
                bad("span_s", f"needs 0 <= start < end, got {list(self.span_s)}")

    def to_json(self) -> dict:
        doc = {
            "id": self.id,
            "audio": self.audio,
            "text": self.text,
            "duration_s": self.duration_s,
            "speaker": self.speaker,
            "origin": self.origin,
            "iteration": self.iteration,
        }
        if self.source_id is not None:
            doc["source_id"] = self.source_id
        if self.span_s is not None:
            doc["span_s"] = [self.span_s[0], self.span_s[1]]
        doc.update(self.extra)
        return doc

    @classmethod
    def from_json(cls, doc: dict, line_no: int | None = None) -> "ManifestEntry":
        missing = [k for k in ("id", "audio", "text", "duration_s") if k not in doc]
        if missing:
            raise InvalidFieldError(missing[0], "missing required field", line_no=line_no)
        span = doc.get("span_s")
        if span is not None:
            if not isinstance(span, (list, tuple)) or len(span) != 2:
                raise InvalidFieldError("span_s", f"must be [start, end], got {span!r}",
                                        line_no=line_no)
            span = (float(span[0]), float(span[1]))
        entry = cls(
            id=doc["id"],
            audio=doc["audio"],
            text=doc["text"],
            duration_s=doc["duration_s"],
            speaker=doc.get("speaker", ""),
            origin=doc.get("origin", ORIGIN_LABELED),
            iteration=doc.get("iteration", 0),
            source_id=doc.get("source_id"),
            span_s=span,
            extra={k: v for k, v in doc.items() if k not in _KNOWN_FIELDS},
        )
        entry.validate(line_no=line_no)
        return entry


def read_manifest(path) -> list[ManifestEntry]:
    """Parse a JSONL manifest, attaching 1-based line numbers to errors."""
    entries: list[ManifestEntry] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(line_no, str(exc)) from exc
            if not isinstance(doc, dict):
                raise ParseError(line_no, f"expected a JSON object, got {type(doc).__name__}")
            entry = ManifestEntry.from_json(doc, line_no=line_no)
            if entry.id in seen:
                raise DuplicateIdError(entry.id, line_no=line_no)
            seen.add(entry.id)
            entries.append(entry)
    return entries


def write_manifest(entries, path) -> None:
    """Write entries as JSONL via a same-directory temp file and atomic rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    seen: set[str] = set()
    for entry in entries:
        entry.validate()
        if entry.id in seen:
            raise DuplicateIdError(entry.id)
        seen.add(entry.id)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            for entry in entries:
                f.write(json.dumps(entry.to_json(), ensure_ascii=False) + "\n")
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except FileNotFoundError:
            pass
        raise


def split_by_duration(entries, l_max_s: float):
    """Split entries into (short, long) around l_max_s; the boundary is short."""
    short = [e for e in entries if e.duration_s <= l_max_s]
    long = [e for e in entries if e.duration_s > l_max_s]
    return short, long
