"""Index build, retrieval exactness, and serialization."""

import numpy as np
import pytest

from vfclass.embedding import PrecomputedStore
from vfclass.errors import (
    CorruptFileError,
    DimensionMismatchError,
    DuplicateIdError,
    EmptyCorpusError,
    EmptyIndexError,
)
from vfclass.index import (
    CaptionIndex,
    CaptionRecord,
    build_index,
    exact_topk,
    load_index,
    retrieve_topk,
    save_index,
)


def brute_force_ids(vectors, ids, query, k):
    """Independent oracle: per-row dot products, full sort by (-score, id)."""
    q = np.asarray(query, dtype=np.float64)
    q = q / np.linalg.norm(q)
    scored = []
    for row, rid in enumerate(ids):
        scored.append((float(np.dot(vectors[row].astype(np.float64), q)), rid))
    scored.sort(key=lambda pair: (-pair[0], pair[1]))
    return [rid for _, rid in scored[:k]]


def random_corpus(rng, size, dim, prefix="rec"):
    ids = [f"{prefix}-{i:05d}" for i in range(size)]
    records = [CaptionRecord(rid, f"caption {rid}") for rid in ids]
    vectors = rng.standard_normal((size, dim))
    vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
    store = PrecomputedStore(dim)
    for rid, vec in zip(ids, vectors):
        store.add(rid, vec)
    return records, store


def basis_index():
    records = [
        CaptionRecord("a", "first caption"),
        CaptionRecord("b", "second caption"),
        CaptionRecord("c", "third caption"),
    ]
    store = PrecomputedStore(3)
    store.add("a", [1.0, 0.0, 0.0])
    store.add("b", [0.0, 1.0, 0.0])
    store.add("c", [0.0, 0.0, 1.0])
    return build_index(records, store)


class TestBuildIndex:
    def test_basis_counts(self):
        index = basis_index()
        assert len(index) == 3
        assert index.dim == 3
        assert [r.id for r in index.records] == ["a", "b", "c"]

    def test_duplicate_ids_rejected(self):
        records = [CaptionRecord("a", "x"), CaptionRecord("a", "y")]
        store = PrecomputedStore(2)
        store.add("a", [1.0, 0.0])
        with pytest.raises(DuplicateIdError):
            build_index(records, store)

    def test_empty_corpus_rejected(self):
        with pytest.raises(EmptyCorpusError):
            build_index([], PrecomputedStore(2))

    def test_rows_unit_normalized(self):
        rng = np.random.default_rng(10)
        records, store = random_corpus(rng, 50, 8)
        # overwrite with unnormalized vectors; build must normalize
        for rid in store.keys():
            store.add(rid, store.vector(rid) * 3.7)
        index = build_index(records, store)
        norms = np.linalg.norm(index.vectors.astype(np.float64), axis=1)
        assert np.allclose(norms, 1.0, atol=1e-5)

    def test_partitioned_membership_is_complete(self):
        rng = np.random.default_rng(11)
        records, store = random_corpus(rng, 1000, 16)
        index = build_index(records, store, structure="partitioned",
                            num_partitions=16, seed=7)
        assert index.num_partitions == 16
        members = np.concatenate(index.partitions)
        assert sorted(members.tolist()) == list(range(1000))

    def test_dedup_drops_repeated_text(self):
        records = [
            CaptionRecord("a", "same text"),
            CaptionRecord("b", "same text"),
            CaptionRecord("c", "other text"),
        ]
        store = PrecomputedStore(2)
        for rid in "abc":
            store.add(rid, [1.0, 0.0])
        index = build_index(records, store, dedup=True)
        assert [r.id for r in index.records] == ["a", "c"]

    def test_insertion_order_irrelevant(self):
        rng = np.random.default_rng(12)
        records, store = random_corpus(rng, 200, 8)
        shuffled = list(records)
        rng.shuffle(shuffled)
        a = build_index(records, store, structure="partitioned",
                        num_partitions=8, seed=3)
        b = build_index(shuffled, store, structure="partitioned",
                        num_partitions=8, seed=3)
        query = rng.standard_normal(8)
        hits_a = retrieve_topk(a, query, 10, probes="all")
        hits_b = retrieve_topk(b, query, 10, probes="all")
        assert [h.record.id for h in hits_a] == [h.record.id for h in hits_b]


class TestRetrieveTopk:
    def test_basis_query(self):
        index = basis_index()
        hits = retrieve_topk(index, [0.0, 1.0, 0.0], 1)
        assert hits[0].record.id == "b"
        assert hits[0].score == pytest.approx(1.0, abs=1e-6)

    def test_k_clamped_to_corpus(self):
        index = basis_index()
        hits = retrieve_topk(index, [1.0, 1.0, 1.0], 10)
        assert len(hits) == 3
        scores = [h.score for h in hits]
        assert scores == sorted(scores, reverse=True)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            retrieve_topk(basis_index(), [1.0, 0.0], 1)

    def test_empty_index(self):
        empty = CaptionIndex(dim=2, records=[],
                             vectors=np.empty((0, 2), dtype=np.float32))
        with pytest.raises(EmptyIndexError):
            retrieve_topk(empty, [1.0, 0.0], 1)

    def test_flat_matches_brute_force(self):
        rng = np.random.default_rng(20)
        for trial in range(20):
            size = int(rng.integers(50, 400))
            records, store = random_corpus(rng, size, 16)
            index = build_index(records, store)
            ids = [r.id for r in index.records]
            for _ in range(5):
                query = rng.standard_normal(16)
                got = [h.record.id for h in retrieve_topk(index, query, 10)]
                want = brute_force_ids(index.vectors, ids, query, 10)
                assert got == want

    def test_partitioned_probes_all_is_exact(self):
        rng = np.random.default_rng(21)
        records, store = random_corpus(rng, 500, 16)
        index = build_index(records, store, structure="partitioned",
                            num_partitions=10, seed=5)
        ids = [r.id for r in index.records]
        for _ in range(20):
            query = rng.standard_normal(16)
            got = [h.record.id for h in retrieve_topk(index, query, 10, probes="all")]
            want = brute_force_ids(index.vectors, ids, query, 10)
            assert got == want

    def test_probes_all_equals_exact_topk(self):
        rng = np.random.default_rng(22)
        records, store = random_corpus(rng, 300, 8)
        index = build_index(records, store, structure="partitioned",
                            num_partitions=12, seed=9)
        for _ in range(10):
            query = rng.standard_normal(8)
            via_probe = retrieve_topk(index, query, 7, probes="all")
            via_scan = exact_topk(index, query, 7)
            assert [h.record.id for h in via_probe] == [h.record.id for h in via_scan]

    def test_limited_probes_returns_sorted_subset(self):
        rng = np.random.default_rng(23)
        records, store = random_corpus(rng, 400, 8)
        index = build_index(records, store, structure="partitioned",
                            num_partitions=16, seed=1)
        query = rng.standard_normal(8)
        hits = retrieve_topk(index, query, 10, probes=2)
        scores = [h.score for h in hits]
        assert scores == sorted(scores, reverse=True)
        all_ids = {r.id for r in index.records}
        assert all(h.record.id in all_ids for h in hits)

    def test_prefix_property(self):
        rng = np.random.default_rng(24)
        records, store = random_corpus(rng, 200, 8)
        index = build_index(records, store)
        for _ in range(10):
            query = rng.standard_normal(8)
            small = [h.record.id for h in retrieve_topk(index, query, 4)]
            large = [h.record.id for h in retrieve_topk(index, query, 9)]
            assert large[:4] == small

    def test_tie_break_ascending_id(self):
        records = [CaptionRecord(rid, f"text {rid}") for rid in ("z", "m", "a")]
        store = PrecomputedStore(2)
        for rid in ("z", "m", "a"):
            store.add(rid, [1.0, 0.0])
        index = build_index(records, store)
        hits = retrieve_topk(index, [1.0, 0.0], 3)
        assert [h.record.id for h in hits] == ["a", "m", "z"]


class TestExactTopk:
    def test_empty_index(self):
        empty = CaptionIndex(dim=2, records=[],
                             vectors=np.empty((0, 2), dtype=np.float32))
        with pytest.raises(EmptyIndexError):
            exact_topk(empty, [1.0, 0.0], 1)

    def test_single_record(self):
        records = [CaptionRecord("only", "lone caption")]
        store = PrecomputedStore(2)
        store.add("only", [0.0, 1.0])
        index = build_index(records, store)
        hits = exact_topk(index, [1.0, 1.0], 1)
        assert hits[0].record.id == "only"


class TestSerialization:
    def test_flat_roundtrip_bit_exact(self, tmp_path):
        index = basis_index()
        path = tmp_path / "small.vfci"
        save_index(index, path)
        loaded = load_index(path)
        assert loaded.dim == index.dim
        assert loaded.structure == "flat"
        assert [r.id for r in loaded.records] == [r.id for r in index.records]
        assert [r.text for r in loaded.records] == [r.text for r in index.records]
        assert np.array_equal(loaded.vectors, index.vectors)
        assert loaded.provider_identity == index.provider_identity

    def test_truncated_file_rejected(self, tmp_path):
        index = basis_index()
        path = tmp_path / "small.vfci"
        save_index(index, path)
        path.write_bytes(path.read_bytes()[:-7])
        with pytest.raises(CorruptFileError):
            load_index(path)

    def test_corrupted_byte_rejected(self, tmp_path):
        index = basis_index()
        path = tmp_path / "small.vfci"
        save_index(index, path)
        data = bytearray(path.read_bytes())
        data[20] ^= 0xFF
        path.write_bytes(bytes(data))
        with pytest.raises(CorruptFileError):
            load_index(path)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.vfci"
        path.write_bytes(b"XXXX" + b"\x00" * 64)
        with pytest.raises(CorruptFileError):
            load_index(path)

    def test_ten_thousand_record_corpus_roundtrips_unchanged(self, tmp_path):
        import json

        from vfclass.ingestion import canonical_jsonl, ingest_corpus

        rng = np.random.default_rng(31)
        corpus_path = tmp_path / "big.jsonl"
        with open(corpus_path, "w") as fh:
            for i in range(10_000):
                fh.write(json.dumps({"id": f"r{i:05d}",
                                     "text": f"caption number {i}",
                                     "source": "bulk"}) + "\n")
        records = ingest_corpus(corpus_path)
        store = PrecomputedStore(8)
        for rec in records:
            store.add(rec.id, rng.standard_normal(8))
        index = build_index(records, store)
        path = tmp_path / "big.vfci"
        save_index(index, path)
        loaded = load_index(path)
        assert loaded.records == index.records
        assert canonical_jsonl(loaded.records) == corpus_path.read_text()

    def test_denormalized_rows_rejected_on_load(self, tmp_path):
        index = basis_index()
        index.vectors = index.vectors * np.float32(1.5)
        path = tmp_path / "bad.vfci"
        save_index(index, path)
        with pytest.raises(CorruptFileError, match="normalized"):
            load_index(path)

    def test_partitioned_roundtrip_preserves_retrieval(self, tmp_path):
        rng = np.random.default_rng(30)
        records, store = random_corpus(rng, 1000, 16)
        index = build_index(records, store, structure="partitioned",
                            num_partitions=16, seed=2)
        path = tmp_path / "big.vfci"
        save_index(index, path)
        loaded = load_index(path)
        assert np.array_equal(loaded.vectors, index.vectors)
        for _ in range(10):
            query = rng.standard_normal(16)
            before = retrieve_topk(index, query, 10, probes=4)
            after = retrieve_topk(loaded, query, 10, probes=4)
            assert [h.record.id for h in before] == [h.record.id for h in after]
            assert [h.score for h in before] == [h.score for h in after]
