"""Embedded caption corpus: build, query, and persist.

The index stores unit-normalized caption vectors, so inner product equals
cosine similarity. Two search structures are available:

- ``flat``: exact scan over all rows (the correctness baseline).
- ``partitioned``: an inverted-list layout whose partition centroids are
  learned by iterative centroid refinement; queries probe the nearest
  partitions, and ``probes="all"`` recovers exact results.

Records are kept in ascending-id order so that builds are insensitive to
input order and score ties resolve identically everywhere.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .embedding import (
    STORE_MAGIC,
    _Reader,
    as_vector,
    body_crc,
    normalize,
)
from .errors import (
    CorruptFileError,
    DimensionMismatchError,
    DuplicateIdError,
    EmptyCorpusError,
    EmptyIndexError,
    EmptyInputError,
)

INDEX_MAGIC = b"VFCI"
INDEX_VERSION = 1
STRUCTURE_FLAT = 0
STRUCTURE_PARTITIONED = 1

KMEANS_ITERS = 25
DEFAULT_PROBES = 8


@dataclass(frozen=True)
class CaptionRecord:
    """One corpus entry: unique id, raw text, and a source tag."""

    id: str
    text: str
    source: str = ""


@dataclass
class RetrievedCaption:
    record: CaptionRecord
    score: float


@dataclass
class CaptionIndex:
    """Immutable-after-build search structure over an embedded corpus."""

    dim: int
    records: list[CaptionRecord]
    vectors: np.ndarray  # count x dim float32, unit rows
    structure: str = "flat"
    centroids: np.ndarray | None = None
    partitions: list[np.ndarray] = field(default_factory=list)
    provider_identity: str = ""

    def __post_init__(self):
        self._row_by_id = {r.id: i for i, r in enumerate(self.records)}

    def __len__(self) -> int:
        return len(self.records)

    @property
    def num_partitions(self) -> int:
        return len(self.partitions)

    def vectors_for_ids(self, ids) -> np.ndarray:
        rows = [self._row_by_id[i] for i in ids]
        return self.vectors[rows].astype(np.float64)


def _embed_records(records: list[CaptionRecord], provider) -> np.ndarray:
    texts = [r.text for r in records]
    if hasattr(provider, "embed_records"):
        vecs = provider.embed_records([r.id for r in records], texts)
    else:
        vecs = provider.embed_texts(texts)
    matrix = np.empty((len(records), provider.dim), dtype=np.float64)
    for i, vec in enumerate(vecs):
        arr = as_vector(vec, f"embedding for record {records[i].id!r}")
        if arr.shape[0] != provider.dim:
            raise DimensionMismatchError(
                f"provider returned dim {arr.shape[0]} for record "
                f"{records[i].id!r}, declared dim {provider.dim}"
            )
        matrix[i] = normalize(arr)
    return matrix.astype(np.float32)


def _farthest_point_init(vectors: np.ndarray, k: int, seed: int) -> np.ndarray:
    """Pick k seed rows: a random start, then repeated farthest points."""
    n = vectors.shape[0]
    rng = np.random.default_rng(seed)
    chosen = [int(rng.integers(n))]
    dist = np.linalg.norm(vectors - vectors[chosen[0]], axis=1)
    while len(chosen) < k:
        nxt = int(np.argmax(dist))  # argmax takes the lowest index on ties
        chosen.append(nxt)
        dist = np.minimum(dist, np.linalg.norm(vectors - vectors[nxt], axis=1))
    return vectors[chosen].astype(np.float64)


def _refine_centroids(
    vectors: np.ndarray, k: int, seed: int, iters: int = KMEANS_ITERS
) -> tuple[np.ndarray, np.ndarray]:
    """Lloyd-style refinement; returns (centroids, assignment)."""
    data = vectors.astype(np.float64)
    n = data.shape[0]
    k = min(k, n)
    centroids = _farthest_point_init(data, k, seed)
    assign = np.zeros(n, dtype=np.int64)
    for _ in range(iters):
        # squared distance: ||x||^2 - 2 x.c + ||c||^2; rows are unit so the
        # first term is constant and can be dropped from the argmin
        d2 = -2.0 * (data @ centroids.T) + np.sum(centroids**2, axis=1)
        assign = np.argmin(d2, axis=1)
        for c in range(k):
            members = np.flatnonzero(assign == c)
            if members.size:
                centroids[c] = data[members].mean(axis=0)
            else:
                # reseed an empty partition with the point farthest from
                # its current centroid (deterministic: lowest index wins)
                far = int(np.argmax(d2[np.arange(n), assign]))
                centroids[c] = data[far]
                assign[far] = c
    d2 = -2.0 * (data @ centroids.T) + np.sum(centroids**2, axis=1)
    assign = np.argmin(d2, axis=1)
    return centroids, assign


def build_index(
    records,
    provider,
    structure: str = "flat",
    num_partitions: int = 16,
    seed: int = 42,
    dedup: bool = False,
) -> CaptionIndex:
    """Embed ``records`` via ``provider`` and assemble a searchable index.

    Records are validated (non-empty corpus, unique non-empty ids, non-blank
    text), sorted by id, optionally deduplicated on identical text, embedded,
    and normalized. ``structure="partitioned"`` additionally learns
    ``num_partitions`` centroids by iterative refinement (seeded).
    """
    records = list(records)
    if not records:
        raise EmptyCorpusError("cannot build an index from an empty corpus")
    seen: set[str] = set()
    for rec in records:
        if not rec.id:
            raise DuplicateIdError("record with empty id")
        if rec.id in seen:
            raise DuplicateIdError(f"duplicate record id {rec.id!r}")
        seen.add(rec.id)
        if not rec.text.strip():
            raise EmptyCorpusError(f"record {rec.id!r} has empty text")
    records.sort(key=lambda r: r.id)
    if dedup:
        kept: list[CaptionRecord] = []
        texts_seen: set[str] = set()
        for rec in records:
            if rec.text in texts_seen:
                continue
            texts_seen.add(rec.text)
            kept.append(rec)
        records = kept

    vectors = _embed_records(records, provider)
    index = CaptionIndex(
        dim=provider.dim,
        records=records,
        vectors=vectors,
        structure="flat",
        provider_identity=getattr(provider, "identity", ""),
    )
    if structure == "partitioned":
        k = max(1, min(num_partitions, len(records)))
        centroids, assign = _refine_centroids(vectors, k, seed)
        partitions = [
            np.flatnonzero(assign == c).astype(np.int64) for c in range(k)
        ]
        index.structure = "partitioned"
        index.centroids = centroids
        index.partitions = partitions
    elif structure != "flat":
        raise EmptyInputError(f"unknown index structure {structure!r}")
    return index


def _check_query(index: CaptionIndex, query, k: int) -> np.ndarray:
    if len(index) == 0:
        raise EmptyIndexError("index contains no records")
    if k < 1:
        raise EmptyInputError("k must be >= 1")
    q = as_vector(query, "query")
    if q.shape[0] != index.dim:
        raise DimensionMismatchError(
            f"query dim {q.shape[0]} != index dim {index.dim}"
        )
    return normalize(q)


def _select_topk(
    index: CaptionIndex, rows: np.ndarray, scores: np.ndarray, k: int
) -> list[RetrievedCaption]:
    """Exact top-k over (rows, scores) with the (-score, id) total order."""
    k_eff = min(k, rows.shape[0])
    if k_eff < rows.shape[0]:
        part = np.argpartition(-scores, k_eff - 1)[:k_eff]
        threshold = scores[part].min()
        keep = np.flatnonzero(scores >= threshold)
    else:
        keep = np.arange(rows.shape[0])
    order = sorted(keep, key=lambda i: (-scores[i], index.records[rows[i]].id))
    out = []
    for i in order[:k_eff]:
        score = max(-1.0, min(1.0, float(scores[i])))
        out.append(RetrievedCaption(index.records[rows[i]], score))
    return out


def retrieve_topk(
    index: CaptionIndex, query, k: int, probes: int | str | None = None
) -> list[RetrievedCaption]:
    """Return the k highest-cosine captions, ties broken by ascending id.

    For a flat index (or ``probes="all"``) results are exactly the
    brute-force top-k. For a partitioned index, only the ``probes`` nearest
    partitions are scanned (default 8).
    """
    q = _check_query(index, query, k)
    if index.structure == "flat":
        rows = np.arange(len(index))
    else:
        if probes == "all":
            n_probe = index.num_partitions
        elif probes is None:
            n_probe = DEFAULT_PROBES
        else:
            n_probe = int(probes)
            if n_probe < 1:
                raise EmptyInputError("probes must be >= 1 or 'all'")
        n_probe = min(n_probe, index.num_partitions)
        if n_probe == index.num_partitions:
            probe_ids = range(index.num_partitions)
        else:
            d2 = np.sum((index.centroids - q) ** 2, axis=1)
            order = sorted(range(index.num_partitions), key=lambda c: (d2[c], c))
            probe_ids = order[:n_probe]
        pieces = [index.partitions[c] for c in probe_ids]
        rows = np.concatenate(pieces) if pieces else np.empty(0, dtype=np.int64)
    if rows.size == 0:
        return []
    scores = index.vectors[rows].astype(np.float64) @ q
    return _select_topk(index, rows, scores, k)


def exact_topk(index: CaptionIndex, query, k: int) -> list[RetrievedCaption]:
    """Linear-scan oracle: full sort of every record by (-score, id)."""
    q = _check_query(index, query, k)
    scored = []
    for row, rec in enumerate(index.records):
        score = float(np.dot(index.vectors[row].astype(np.float64), q))
        scored.append((rec, score))
    scored.sort(key=lambda pair: (-pair[1], pair[0].id))
    return [
        RetrievedCaption(rec, max(-1.0, min(1.0, score)))
        for rec, score in scored[:k]
    ]


def _index_body(index: CaptionIndex) -> bytes:
    parts = [STORE_MAGIC, struct.pack("<I", 1)]
    parts.append(struct.pack("<I", index.dim))
    parts.append(struct.pack("<Q", len(index)))
    parts.append(struct.pack("<B", 0))
    parts.append(index.vectors.astype("<f4").tobytes())
    for rec in index.records:
        encoded = rec.id.encode("utf-8")
        parts.append(struct.pack("<I", len(encoded)))
        parts.append(encoded)
    ident = index.provider_identity.encode("utf-8")
    parts.append(struct.pack("<I", len(ident)))
    parts.append(ident)
    for rec in index.records:
        for value in (rec.text, rec.source):
            encoded = value.encode("utf-8")
            parts.append(struct.pack("<I", len(encoded)))
            parts.append(encoded)
    if index.structure == "partitioned":
        parts.append(struct.pack("<B", STRUCTURE_PARTITIONED))
        parts.append(struct.pack("<I", index.num_partitions))
        parts.append(index.centroids.astype("<f8").tobytes())
        for members in index.partitions:
            parts.append(struct.pack("<Q", members.size))
            parts.append(members.astype("<u4").tobytes())
    else:
        parts.append(struct.pack("<B", STRUCTURE_FLAT))
    return b"".join(parts)


def save_index(index: CaptionIndex, path) -> None:
    """Write the ``VFCI`` file: magic, version, body, trailing CRC32."""
    body = _index_body(index)
    with open(path, "wb") as fh:
        fh.write(INDEX_MAGIC)
        fh.write(struct.pack("<I", INDEX_VERSION))
        fh.write(body)
        fh.write(struct.pack("<I", body_crc(body)))


def load_index(path) -> CaptionIndex:
    """Read a ``VFCI`` file, verifying magic, version, CRC, and layout."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 12:
        raise CorruptFileError("file too short to be an index")
    if data[:4] != INDEX_MAGIC:
        raise CorruptFileError(f"bad magic {data[:4]!r}, expected {INDEX_MAGIC!r}")
    version = struct.unpack("<I", data[4:8])[0]
    if version != INDEX_VERSION:
        raise CorruptFileError(f"unsupported index version {version}")
    body = data[8:-4]
    stored_crc = struct.unpack("<I", data[-4:])[0]
    if body_crc(body) != stored_crc:
        raise CorruptFileError("CRC mismatch: file is corrupt or truncated")

    reader = _Reader(body)
    if reader.take(4) != STORE_MAGIC:
        raise CorruptFileError("missing embedding payload")
    if reader.u32() != 1:
        raise CorruptFileError("unsupported embedding payload version")
    dim = reader.u32()
    count = reader.u64()
    if reader.u8() != 0:
        raise CorruptFileError("unsupported vector dtype")
    vectors = np.frombuffer(reader.take(count * dim * 4), dtype="<f4").reshape(
        count, dim
    )
    if count and not np.allclose(
        np.linalg.norm(vectors.astype(np.float64), axis=1), 1.0, atol=1e-5
    ):
        raise CorruptFileError("index rows are not unit-normalized")
    ids = [reader.string() for _ in range(count)]
    identity = reader.string()
    records = []
    for rid in ids:
        text = reader.string()
        source = reader.string()
        records.append(CaptionRecord(rid, text, source))
    structure_code = reader.u8()
    index = CaptionIndex(
        dim=dim,
        records=records,
        vectors=np.array(vectors, dtype=np.float32),
        provider_identity=identity,
    )
    if structure_code == STRUCTURE_PARTITIONED:
        num_partitions = reader.u32()
        centroids = np.frombuffer(
            reader.take(num_partitions * dim * 8), dtype="<f8"
        ).reshape(num_partitions, dim)
        partitions = []
        for _ in range(num_partitions):
            size = reader.u64()
            members = np.frombuffer(reader.take(size * 4), dtype="<u4")
            partitions.append(members.astype(np.int64))
        covered = np.concatenate(partitions) if partitions else np.empty(0)
        if covered.size != count or len(set(covered.tolist())) != count:
            raise CorruptFileError("partition member lists do not cover the corpus")
        index.structure = "partitioned"
        index.centroids = np.array(centroids)
        index.partitions = partitions
    elif structure_code != STRUCTURE_FLAT:
        raise CorruptFileError(f"unknown structure code {structure_code}")
    if reader.offset != len(body):
        raise CorruptFileError("trailing bytes in index body")
    return index
