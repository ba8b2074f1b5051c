"""Corpus and manifest I/O.

Caption corpora arrive as JSON-lines (``{"id", "text", "source"}``) or as
plain text with one caption per line (ids auto-assigned ``line-<n>``).
Malformed lines are skipped and logged with their line number; a strict
flag turns them into hard errors. Web-scale caption dumps are dirty, so
skip-and-report is the default.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass, field

from .candidates import FilterConfig, POS_CATEGORIES, pos_tag, remove_noise, standardize
from .errors import EmptyInputError, SchemaError, UnknownKeyError
from .index import CaptionRecord

log = logging.getLogger(__name__)


def ingest_corpus(path, fmt: str = "jsonl", strict: bool = False) -> list[CaptionRecord]:
    """Read caption records from ``path``.

    ``fmt`` is ``jsonl`` or ``plain``. Bad lines are logged and skipped
    unless ``strict`` is set, in which case the first one raises with its
    line number.
    """
    if fmt not in ("jsonl", "plain"):
        raise EmptyInputError(f"unknown corpus format {fmt!r}")
    records: list[CaptionRecord] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            try:
                records.append(_parse_line(line, lineno, fmt))
            except SchemaError as err:
                if strict:
                    raise
                log.warning("skipping corpus line %d: %s", lineno, err)
    return records


def _parse_line(line: str, lineno: int, fmt: str) -> CaptionRecord:
    if fmt == "plain":
        return CaptionRecord(id=f"line-{lineno}", text=line.strip(), source="plain")
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"line {lineno}: invalid JSON ({exc})") from exc
    if not isinstance(obj, dict):
        raise SchemaError(f"line {lineno}: expected an object")
    rid = obj.get("id")
    text = obj.get("text")
    if not isinstance(rid, str) or not rid:
        raise SchemaError(f"line {lineno}: missing or empty 'id'")
    if not isinstance(text, str) or not text.strip():
        raise SchemaError(f"line {lineno}: missing or empty 'text'")
    source = obj.get("source", "")
    if not isinstance(source, str):
        raise SchemaError(f"line {lineno}: 'source' must be a string")
    return CaptionRecord(id=rid, text=text, source=source)


def canonical_jsonl(records) -> str:
    """Serialize records to the canonical byte layout (fixed field order)."""
    lines = []
    for rec in records:
        lines.append(
            json.dumps(
                {"id": rec.id, "text": rec.text, "source": rec.source},
                ensure_ascii=False,
            )
        )
    return "\n".join(lines) + ("\n" if lines else "")


def write_corpus(records, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_jsonl(records))


@dataclass
class CorpusStats:
    caption_count: int
    token_count: int
    unique_word_count: int
    pos_percentages: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "caption_count": self.caption_count,
            "token_count": self.token_count,
            "unique_word_count": self.unique_word_count,
            "pos_percentages": self.pos_percentages,
        }


def corpus_stats(records, tagger, config: FilterConfig | None = None) -> CorpusStats:
    """Token counts and POS distribution after noise removal + standardization."""
    if not records:
        raise EmptyInputError("corpus is empty")
    config = config or FilterConfig()
    tokens: list[str] = []
    for rec in records:
        tokens.extend(standardize(remove_noise(rec.text, config)))
    pos_counts: Counter[str] = Counter(pos_tag(tok, tagger) for tok in tokens)
    total = len(tokens)
    if total:
        percentages = {
            cat: 100.0 * pos_counts.get(cat, 0) / total for cat in POS_CATEGORIES
        }
    else:
        percentages = {cat: 0.0 for cat in POS_CATEGORIES}
    return CorpusStats(
        caption_count=len(records),
        token_count=total,
        unique_word_count=len(set(tokens)),
        pos_percentages=percentages,
    )


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    ref: str
    label: str
    ref_kind: str = "image_ref"  # or "embedding_ref"


@dataclass
class DatasetManifest:
    name: str
    embedder_identity: str
    entries: list[ManifestEntry] = field(default_factory=list)


def load_manifest(path) -> DatasetManifest:
    """Read a dataset manifest (JSON document) and validate its schema."""
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"manifest is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("entries"), list):
        raise SchemaError("manifest must be an object with an 'entries' list")
    name = doc.get("name", "")
    embedder = doc.get("embedder", "")
    entries: list[ManifestEntry] = []
    seen: set[str] = set()
    for pos, raw in enumerate(doc["entries"]):
        if not isinstance(raw, dict):
            raise SchemaError(f"entry {pos} is not an object")
        eid = raw.get("id")
        label = raw.get("label")
        if not isinstance(eid, str) or not eid:
            raise SchemaError(f"entry {pos}: missing or empty 'id'")
        if eid in seen:
            raise SchemaError(f"entry {pos}: duplicate id {eid!r}")
        seen.add(eid)
        if not isinstance(label, str) or not label:
            raise SchemaError(f"entry {pos}: missing or empty 'label'")
        if "image_ref" in raw:
            ref, kind = raw["image_ref"], "image_ref"
        elif "embedding_ref" in raw:
            ref, kind = raw["embedding_ref"], "embedding_ref"
        else:
            raise SchemaError(
                f"entry {pos}: need one of 'image_ref' or 'embedding_ref'"
            )
        if not isinstance(ref, str) or not ref:
            raise SchemaError(f"entry {pos}: ref must be a non-empty string")
        entries.append(ManifestEntry(eid, ref, label, kind))
    return DatasetManifest(name=str(name), embedder_identity=str(embedder),
                           entries=entries)


def save_manifest(manifest: DatasetManifest, path) -> None:
    doc = {
        "name": manifest.name,
        "embedder": manifest.embedder_identity,
        "entries": [
            {"id": e.id, e.ref_kind: e.ref, "label": e.label}
            for e in manifest.entries
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, ensure_ascii=False, indent=2)
        fh.write("\n")


def validate_manifest(manifest: DatasetManifest, store) -> list[str]:
    """Return ids of entries whose refs do not resolve against the store."""
    dangling = []
    for entry in manifest.entries:
        try:
            resolvable = entry.ref in store
        except TypeError:
            try:
                store.embed_image(entry.ref)
                resolvable = True
            except UnknownKeyError:
                resolvable = False
        if not resolvable:
            dangling.append(entry.id)
    return dangling
