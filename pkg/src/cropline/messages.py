"""Hashtag-gated message parsing and replay-log loading.

A tracked message either follows the labeled format
``Name: <disease> Solution: <remedy> #tag`` (labels case-insensitive, Name
before Solution) or is treated as an unlabeled suggestion whose whole text is
the proposed solution. Mentions and URLs are stripped before label extraction.

Replay logs are newline-delimited JSON objects with fields exactly
``id, author, ts, text, image, parent`` (``image`` and ``parent`` nullable).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

from .errors import InputError, MalformedLabels, NotTracked
from .kb import normalize_name

_HASHTAG_RE = re.compile(r"#\w+")
_NOISE_RE = re.compile(r"https?://\S+|@\w+")
_NAME_LABEL_RE = re.compile(r"\bname\s*:", re.IGNORECASE)
_SOLUTION_LABEL_RE = re.compile(r"\bsolution\s*:", re.IGNORECASE)

_LOG_FIELDS = {"id", "author", "ts", "text", "image", "parent"}


@dataclass(frozen=True)
class RawMessage:
    id: str
    author: str
    timestamp: int
    text: str
    image_path: str | None = None
    parent_id: str | None = None

    @property
    def is_root(self) -> bool:
        return self.parent_id is None


@dataclass(frozen=True)
class ParsedReply:
    source_id: str
    disease_name: str | None
    solution_text: str | None
    has_image: bool
    is_labeled: bool
    author: str
    timestamp: int


def _strip_tags(text: str) -> str:
    return normalize_name(_HASHTAG_RE.sub(" ", text))


def parse_message(msg: RawMessage, tracked_hashtag: str) -> ParsedReply:
    """Extract (disease, solution) from a tracked message.

    Raises NotTracked when the configured hashtag is missing and
    MalformedLabels when labels are present but unusable (empty values, or
    Solution appearing before Name).
    """
    if not tracked_hashtag.startswith("#"):
        raise ValueError("tracked_hashtag must start with '#'")
    tags = {t.lower() for t in _HASHTAG_RE.findall(msg.text)}
    if tracked_hashtag.lower() not in tags:
        raise NotTracked(f"message {msg.id} does not carry {tracked_hashtag}")

    cleaned = _NOISE_RE.sub(" ", msg.text)
    name_m = _NAME_LABEL_RE.search(cleaned)
    sol_m = _SOLUTION_LABEL_RE.search(cleaned)

    if name_m is None and sol_m is None:
        solution = _strip_tags(cleaned)
        return ParsedReply(source_id=msg.id, disease_name=None,
                           solution_text=solution or None,
                           has_image=msg.image_path is not None,
                           is_labeled=False, author=msg.author,
                           timestamp=msg.timestamp)

    if name_m is not None and sol_m is not None and sol_m.start() < name_m.start():
        raise MalformedLabels(
            f"message {msg.id}: Solution label precedes Name label")

    disease = None
    solution = None
    if name_m is not None:
        end = sol_m.start() if sol_m is not None else len(cleaned)
        disease = _strip_tags(cleaned[name_m.end():end])
        if not disease:
            raise MalformedLabels(f"message {msg.id}: empty Name value")
    if sol_m is not None:
        solution = _strip_tags(cleaned[sol_m.end():])
        if not solution:
            raise MalformedLabels(f"message {msg.id}: empty Solution value")

    return ParsedReply(source_id=msg.id, disease_name=disease,
                       solution_text=solution,
                       has_image=msg.image_path is not None,
                       is_labeled=disease is not None and solution is not None,
                       author=msg.author, timestamp=msg.timestamp)


def load_log(path: str | Path) -> list[RawMessage]:
    """Load a replay log, validate it, and return messages in timestamp order.

    Relative image paths are resolved against the log file's directory so
    bundled fixtures stay self-contained.
    """
    p = Path(path)
    if not p.is_file():
        raise InputError(f"log file not found: {p}")
    messages: list[RawMessage] = []
    seen: set[str] = set()
    with p.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InputError(f"line {lineno}: invalid JSON: {exc.msg}") from None
            if not isinstance(obj, dict) or set(obj) != _LOG_FIELDS:
                raise InputError(
                    f"line {lineno}: record fields must be exactly "
                    f"{sorted(_LOG_FIELDS)}")
            if not isinstance(obj["id"], str) or not obj["id"]:
                raise InputError(f"line {lineno}: id must be a nonempty string")
            if not isinstance(obj["author"], str) or not obj["author"]:
                raise InputError(f"line {lineno}: author must be a nonempty string")
            if not isinstance(obj["ts"], int):
                raise InputError(f"line {lineno}: ts must be an integer")
            if not isinstance(obj["text"], str):
                raise InputError(f"line {lineno}: text must be a string")
            for field in ("image", "parent"):
                if obj[field] is not None and not isinstance(obj[field], str):
                    raise InputError(f"line {lineno}: {field} must be a string or null")
            if obj["id"] in seen:
                raise InputError(f"line {lineno}: duplicate message id {obj['id']!r}")
            seen.add(obj["id"])
            image = obj["image"]
            if image is not None and not Path(image).is_absolute():
                image = str(p.parent / image)
            messages.append(RawMessage(id=obj["id"], author=obj["author"],
                                       timestamp=obj["ts"], text=obj["text"],
                                       image_path=image, parent_id=obj["parent"]))
    for msg in messages:
        if msg.parent_id is not None and msg.parent_id not in seen:
            raise InputError(f"message {msg.id}: dangling parent_id {msg.parent_id!r}")
    messages.sort(key=lambda m: m.timestamp)
    return messages


def group_threads(messages: list[RawMessage]) -> list[tuple[RawMessage, list[RawMessage]]]:
    """Group messages into (root, replies) threads, in root timestamp order.

    Nested replies are attached to their top-level ancestor; replies keep
    timestamp order.
    """
    by_id = {m.id: m for m in messages}

    def root_of(m: RawMessage) -> RawMessage:
        while m.parent_id is not None:
            m = by_id[m.parent_id]
        return m

    threads: dict[str, list[RawMessage]] = {m.id: [] for m in messages if m.is_root}
    for m in messages:
        if not m.is_root:
            threads[root_of(m).id].append(m)
    roots = sorted((m for m in messages if m.is_root), key=lambda m: m.timestamp)
    return [(root, threads[root.id]) for root in roots]
