"""Embedding-space primitives and the providers that produce vectors.

The engine never runs a model itself: every vector enters through a
provider. Two providers are shipped:

- :class:`PrecomputedStore`, a binary dump of vectors keyed by string
  (caption id, caption text, image ref, or candidate word), used for tests
  and offline runs. File format ``VFCE``, see :func:`save_store`.
- :class:`RemoteEmbeddingClient`, an HTTP client speaking a small JSON
  contract (``{"inputs": [...], "modality": "text"|"image"}``), used for
  live runs against an embedding service.

Vectors are stored at float32; all similarity math runs at float64.
"""

from __future__ import annotations

import hashlib
import struct
import zlib
from typing import Iterable, Sequence

import numpy as np
import requests

from .errors import (
    CorruptFileError,
    DimensionMismatchError,
    EmptyInputError,
    ProviderUnavailableError,
    UnknownKeyError,
    ZeroVectorError,
)

STORE_MAGIC = b"VFCE"
STORE_VERSION = 1
DTYPE_F32 = 0


def as_vector(values, name: str = "vector") -> np.ndarray:
    """Coerce to a 1-D float64 array, rejecting NaN/Inf and empty input."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise EmptyInputError(f"{name} must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(arr)):
        raise EmptyInputError(f"{name} contains non-finite values")
    return arr


def normalize(v) -> np.ndarray:
    """Scale ``v`` to unit Euclidean norm, preserving direction."""
    arr = as_vector(v)
    norm = float(np.linalg.norm(arr))
    if norm == 0.0:
        raise ZeroVectorError("cannot normalize a zero vector")
    return arr / norm


def cosine_similarity(a, b) -> float:
    """Cosine of the angle between ``a`` and ``b``, clamped to [-1, 1]."""
    va = as_vector(a, "a")
    vb = as_vector(b, "b")
    if va.shape[0] != vb.shape[0]:
        raise DimensionMismatchError(
            f"dimension mismatch: {va.shape[0]} vs {vb.shape[0]}"
        )
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        raise ZeroVectorError("cosine similarity undefined for zero vectors")
    value = float(np.dot(va, vb) / (na * nb))
    return max(-1.0, min(1.0, value))


def hashed_vector(text: str, modality: str = "text", dim: int = 64) -> np.ndarray:
    """Deterministic unit vector derived from SHA-256 of the input.

    The same (text, modality, dim) triple always yields the same vector,
    independent of platform or library version. Used by the stub embedding
    service and as the offline default for semantic-similarity scoring.
    """
    if dim <= 0:
        raise EmptyInputError("dim must be positive")
    raw = np.empty(dim, dtype=np.float64)
    filled = 0
    block = 0
    seed = f"{modality}\x00{text}".encode("utf-8")
    while filled < dim:
        digest = hashlib.sha256(seed + b"\x00" + str(block).encode()).digest()
        # 8 eight-byte words per digest, mapped into (-1, 1)
        words = struct.unpack("<4Q", digest[:32])
        for w in words:
            if filled >= dim:
                break
            raw[filled] = (w / 2**64) * 2.0 - 1.0
            filled += 1
        block += 1
    return normalize(raw)


def _check_texts(texts: Sequence[str]) -> list[str]:
    if not texts:
        raise EmptyInputError("texts must be non-empty")
    cleaned = []
    for t in texts:
        if not isinstance(t, str) or not t.strip():
            raise EmptyInputError("each text must be a non-empty string")
        cleaned.append(t)
    return cleaned


class PrecomputedStore:
    """Embedding provider backed by an in-memory table of named vectors.

    Keys are free-form strings: caption ids, caption texts, image refs, or
    candidate words. ``embed_texts`` resolves each input string as a key;
    ``embed_image`` resolves the ref the same way.
    """

    kind = "precomputed-store"

    def __init__(self, dim: int, identity: str = "precomputed"):
        if dim <= 0:
            raise EmptyInputError("dim must be positive")
        self.dim = int(dim)
        self.identity = identity
        self._keys: list[str] = []
        self._rows: dict[str, int] = {}
        self._chunks: list[np.ndarray] = []
        self._matrix: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self._keys)

    def __contains__(self, key: str) -> bool:
        return key in self._rows

    def keys(self) -> list[str]:
        return list(self._keys)

    def add(self, key: str, vector) -> None:
        """Register ``vector`` under ``key``; later adds overwrite."""
        arr = as_vector(vector, f"vector for {key!r}")
        if arr.shape[0] != self.dim:
            raise DimensionMismatchError(
                f"vector for {key!r} has dim {arr.shape[0]}, store dim {self.dim}"
            )
        row = arr.astype(np.float32)[None, :]
        if key in self._rows:
            self._materialize()
            self._matrix[self._rows[key]] = row[0]
            return
        self._rows[key] = len(self._keys)
        self._keys.append(key)
        self._chunks.append(row)
        self._matrix = None

    def add_many(self, items: Iterable[tuple[str, np.ndarray]]) -> None:
        for key, vec in items:
            self.add(key, vec)

    def _materialize(self) -> np.ndarray:
        if self._matrix is None:
            if self._chunks:
                self._matrix = np.concatenate(self._chunks, axis=0)
            else:
                self._matrix = np.empty((0, self.dim), dtype=np.float32)
            self._chunks = [self._matrix]
        return self._matrix

    def vector(self, key: str) -> np.ndarray:
        if key not in self._rows:
            raise UnknownKeyError(f"no embedding stored for key {key!r}")
        return self._materialize()[self._rows[key]].astype(np.float64)

    def embed_texts(self, texts: Sequence[str]) -> list[np.ndarray]:
        cleaned = _check_texts(texts)
        missing = [t for t in cleaned if t not in self._rows]
        if missing:
            raise UnknownKeyError(
                f"store has no embedding for {len(missing)} text(s), "
                f"first missing: {missing[0]!r}"
            )
        return [self.vector(t) for t in cleaned]

    def embed_image(self, image_ref: str) -> np.ndarray:
        if not image_ref:
            raise EmptyInputError("image_ref must be non-empty")
        return self.vector(image_ref)

    def embed_records(self, ids: Sequence[str], texts: Sequence[str]) -> list[np.ndarray]:
        """Resolve caption embeddings by id when present, else by text."""
        out = []
        for rid, text in zip(ids, texts):
            key = rid if rid in self._rows else text
            out.append(self.vector(key))
        return out

    def save(self, path) -> None:
        save_store(self, path)

    @classmethod
    def load(cls, path, identity: str | None = None) -> "PrecomputedStore":
        return load_store(path, identity=identity)


def store_payload(store: PrecomputedStore) -> bytes:
    """Serialize a store to the ``VFCE`` binary layout."""
    matrix = store._materialize()
    parts = [
        STORE_MAGIC,
        struct.pack("<I", STORE_VERSION),
        struct.pack("<I", store.dim),
        struct.pack("<Q", len(store)),
        struct.pack("<B", DTYPE_F32),
        matrix.astype("<f4").tobytes(),
    ]
    for key in store.keys():
        encoded = key.encode("utf-8")
        parts.append(struct.pack("<I", len(encoded)))
        parts.append(encoded)
    return b"".join(parts)


def save_store(store: PrecomputedStore, path) -> None:
    with open(path, "wb") as fh:
        fh.write(store_payload(store))


class _Reader:
    """Cursor over a byte buffer that fails loudly on truncation."""

    def __init__(self, data: bytes, offset: int = 0):
        self.data = data
        self.offset = offset

    def take(self, n: int) -> bytes:
        if self.offset + n > len(self.data):
            raise CorruptFileError("unexpected end of file")
        chunk = self.data[self.offset : self.offset + n]
        self.offset += n
        return chunk

    def u8(self) -> int:
        return self.take(1)[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    def string(self) -> str:
        length = self.u32()
        try:
            return self.take(length).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CorruptFileError("malformed UTF-8 in key table") from exc


def read_store_payload(reader: _Reader, identity: str | None = None) -> PrecomputedStore:
    magic = reader.take(4)
    if magic != STORE_MAGIC:
        raise CorruptFileError(f"bad magic {magic!r}, expected {STORE_MAGIC!r}")
    version = reader.u32()
    if version != STORE_VERSION:
        raise CorruptFileError(f"unsupported store version {version}")
    dim = reader.u32()
    count = reader.u64()
    dtype = reader.u8()
    if dtype != DTYPE_F32:
        raise CorruptFileError(f"unsupported dtype code {dtype}")
    if dim == 0:
        raise CorruptFileError("store declares dim 0")
    matrix = np.frombuffer(reader.take(count * dim * 4), dtype="<f4").reshape(count, dim)
    store = PrecomputedStore(dim, identity=identity or "precomputed")
    keys = [reader.string() for _ in range(count)]
    if len(set(keys)) != len(keys):
        raise CorruptFileError("duplicate keys in store file")
    store._keys = keys
    store._rows = {k: i for i, k in enumerate(keys)}
    store._matrix = np.array(matrix, dtype=np.float32)
    store._chunks = [store._matrix]
    return store


def load_store(path, identity: str | None = None) -> PrecomputedStore:
    with open(path, "rb") as fh:
        data = fh.read()
    reader = _Reader(data)
    store = read_store_payload(reader, identity=identity)
    if reader.offset != len(data):
        raise CorruptFileError("trailing bytes after store payload")
    return store


class RemoteEmbeddingClient:
    """Embedding provider speaking the remote HTTP JSON contract.

    POSTs ``{"inputs": [...], "modality": "text"|"image"}`` to ``base_url``
    and expects ``{"dim": N, "vectors": [[...], ...]}``. The dimension is
    pinned on the first successful response (or up front via ``dim``) and
    any later deviation is a hard error.

    Returned vectors are quantized to float32 (the engine's storage
    precision) so a live run is bit-identical to a run against the same
    vectors dumped to a binary store.
    """

    kind = "remote-service"

    def __init__(
        self,
        base_url: str,
        dim: int | None = None,
        timeout: float = 10.0,
        identity: str | None = None,
    ):
        self.base_url = base_url
        self.dim = dim
        self.timeout = timeout
        self.identity = identity or f"remote:{base_url}"

    def _post(self, inputs: Sequence[str], modality: str) -> list[np.ndarray]:
        try:
            resp = requests.post(
                self.base_url,
                json={"inputs": list(inputs), "modality": modality},
                timeout=self.timeout,
            )
            resp.raise_for_status()
            body = resp.json()
        except requests.RequestException as exc:
            raise ProviderUnavailableError(
                f"embedding service at {self.base_url} unavailable: {exc}"
            ) from exc
        except ValueError as exc:
            raise ProviderUnavailableError(
                f"embedding service returned invalid JSON: {exc}"
            ) from exc
        dim = body.get("dim")
        vectors = body.get("vectors")
        if not isinstance(dim, int) or not isinstance(vectors, list):
            raise ProviderUnavailableError("malformed response from embedding service")
        if self.dim is None:
            self.dim = dim
        if dim != self.dim:
            raise DimensionMismatchError(
                f"service returned dim {dim}, expected {self.dim}"
            )
        if len(vectors) != len(inputs):
            raise ProviderUnavailableError(
                f"service returned {len(vectors)} vectors for {len(inputs)} inputs"
            )
        out = []
        for vec in vectors:
            arr = as_vector(vec, "service vector")
            if arr.shape[0] != self.dim:
                raise DimensionMismatchError(
                    f"service vector has dim {arr.shape[0]}, expected {self.dim}"
                )
            out.append(arr.astype(np.float32).astype(np.float64))
        return out

    def embed_texts(self, texts: Sequence[str]) -> list[np.ndarray]:
        return self._post(_check_texts(texts), "text")

    def embed_image(self, image_ref: str) -> np.ndarray:
        if not image_ref:
            raise EmptyInputError("image_ref must be non-empty")
        return self._post([image_ref], "image")[0]


class HashEmbedder:
    """Offline provider producing :func:`hashed_vector` embeddings.

    Identical inputs always map to identical vectors, which makes it the
    deterministic default for text-similarity scoring without a service.
    """

    kind = "hash"

    def __init__(self, dim: int = 64):
        if dim <= 0:
            raise EmptyInputError("dim must be positive")
        self.dim = int(dim)
        self.identity = f"hash-v1:{dim}"

    def embed_texts(self, texts: Sequence[str]) -> list[np.ndarray]:
        return [hashed_vector(t, "text", self.dim) for t in _check_texts(texts)]

    def embed_image(self, image_ref: str) -> np.ndarray:
        if not image_ref:
            raise EmptyInputError("image_ref must be non-empty")
        return hashed_vector(image_ref, "image", self.dim)


def body_crc(data: bytes) -> int:
    return zlib.crc32(data) & 0xFFFFFFFF
