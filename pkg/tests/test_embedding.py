"""Vector math, the binary store, and provider behavior."""

import numpy as np
import pytest

from vfclass.embedding import (
    HashEmbedder,
    PrecomputedStore,
    cosine_similarity,
    hashed_vector,
    load_store,
    normalize,
    save_store,
)
from vfclass.errors import (
    CorruptFileError,
    DimensionMismatchError,
    EmptyInputError,
    UnknownKeyError,
    ZeroVectorError,
)

# 32 / sqrt(14 * 77), computed with 50-digit arithmetic and frozen
COS_123_456 = 0.9746318461970763


class TestNormalize:
    def test_three_four_five(self):
        assert np.allclose(normalize([3.0, 4.0]), [0.6, 0.8])

    def test_unit_vector_unchanged(self):
        v = np.array([1.0, 0.0, 0.0])
        assert np.allclose(normalize(v), v, atol=1e-7)

    def test_zero_vector_rejected(self):
        with pytest.raises(ZeroVectorError):
            normalize([0.0, 0.0])

    def test_idempotent(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            v = rng.standard_normal(8)
            once = normalize(v)
            assert np.allclose(normalize(once), once, atol=1e-7)

    def test_rejects_nan(self):
        with pytest.raises(EmptyInputError):
            normalize([1.0, float("nan")])


class TestCosineSimilarity:
    def test_identical_direction(self):
        assert cosine_similarity([1.0, 0.0], [1.0, 0.0]) == 1.0

    def test_orthogonal(self):
        assert cosine_similarity([1.0, 0.0], [0.0, 1.0]) == 0.0

    def test_frozen_oracle_value(self):
        got = cosine_similarity([1.0, 2.0, 3.0], [4.0, 5.0, 6.0])
        assert got == pytest.approx(COS_123_456, abs=1e-9)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            cosine_similarity([1.0, 0.0], [1.0, 0.0, 0.0])

    def test_zero_vector(self):
        with pytest.raises(ZeroVectorError):
            cosine_similarity([0.0, 0.0], [1.0, 0.0])

    def test_symmetric(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            a = rng.standard_normal(6)
            b = rng.standard_normal(6)
            assert cosine_similarity(a, b) == cosine_similarity(b, a)

    def test_scaling_invariance(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            a = rng.standard_normal(5)
            k = float(rng.uniform(0.1, 10.0))
            assert cosine_similarity(a, k * a) == pytest.approx(1.0, abs=1e-7)
            assert cosine_similarity(a, -k * a) == pytest.approx(-1.0, abs=1e-7)

    def test_normalization_does_not_change_value(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            a = rng.standard_normal(7)
            b = rng.standard_normal(7)
            raw = cosine_similarity(a, b)
            unit = cosine_similarity(normalize(a), normalize(b))
            assert unit == pytest.approx(raw, abs=1e-6)

    def test_clamped_to_range(self):
        v = np.full(16, 0.25)
        assert -1.0 <= cosine_similarity(v, v) <= 1.0


class TestPrecomputedStore:
    def make_store(self):
        store = PrecomputedStore(dim=3, identity="test-store")
        store.add("dog", [1.0, 0.0, 0.0])
        store.add("cat", [0.0, 1.0, 0.0])
        store.add("img_001", [0.0, 0.0, 1.0])
        return store

    def test_text_lookup_identity(self):
        store = self.make_store()
        [vec] = store.embed_texts(["dog"])
        assert np.allclose(vec, [1.0, 0.0, 0.0])

    def test_empty_input_rejected(self):
        with pytest.raises(EmptyInputError):
            self.make_store().embed_texts([])

    def test_image_lookup_identity(self):
        store = self.make_store()
        assert np.allclose(store.embed_image("img_001"), [0.0, 0.0, 1.0])

    def test_unknown_image_ref(self):
        with pytest.raises(UnknownKeyError):
            self.make_store().embed_image("missing")

    def test_unknown_text_lists_missing(self):
        with pytest.raises(UnknownKeyError, match="zebra"):
            self.make_store().embed_texts(["dog", "zebra"])

    def test_order_preserved_under_permutation(self):
        store = self.make_store()
        forward = store.embed_texts(["dog", "cat"])
        backward = store.embed_texts(["cat", "dog"])
        assert np.allclose(forward[0], backward[1])
        assert np.allclose(forward[1], backward[0])

    def test_dimension_enforced_on_add(self):
        store = self.make_store()
        with pytest.raises(DimensionMismatchError):
            store.add("bad", [1.0, 2.0])

    def test_overwrite_updates_vector(self):
        store = self.make_store()
        store.add("dog", [0.5, 0.5, 0.0])
        assert np.allclose(store.vector("dog"), [0.5, 0.5, 0.0])

    def test_roundtrip(self, tmp_path):
        store = self.make_store()
        path = tmp_path / "vectors.vfce"
        save_store(store, path)
        loaded = load_store(path)
        assert loaded.dim == store.dim
        assert loaded.keys() == store.keys()
        for key in store.keys():
            assert np.array_equal(loaded.vector(key), store.vector(key))

    def test_truncated_file_rejected(self, tmp_path):
        store = self.make_store()
        path = tmp_path / "vectors.vfce"
        save_store(store, path)
        data = path.read_bytes()
        path.write_bytes(data[:-5])
        with pytest.raises(CorruptFileError):
            load_store(path)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "vectors.vfce"
        path.write_bytes(b"NOPE" + b"\x00" * 32)
        with pytest.raises(CorruptFileError):
            load_store(path)


class TestHashedVector:
    def test_deterministic(self):
        a = hashed_vector("same input", "text", 16)
        b = hashed_vector("same input", "text", 16)
        assert np.array_equal(a, b)

    def test_modality_changes_vector(self):
        a = hashed_vector("thing", "text", 16)
        b = hashed_vector("thing", "image", 16)
        assert not np.allclose(a, b)

    def test_unit_norm(self):
        v = hashed_vector("anything", "text", 33)
        assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-9)

    def test_hash_embedder_identity(self):
        emb = HashEmbedder(dim=8)
        [a] = emb.embed_texts(["dog"])
        [b] = emb.embed_texts(["dog"])
        assert np.array_equal(a, b)
        assert cosine_similarity(a, b) == 1.0
