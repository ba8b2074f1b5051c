"""Score fusion and the end-to-end classifier on planted worlds."""

import math

import numpy as np
import pytest

from vfclass.candidates import LexiconTagger
from vfclass.embedding import PrecomputedStore, cosine_similarity
from vfclass.errors import (
    DimensionMismatchError,
    EmptyCandidateSetError,
    EmptyInputError,
)
from vfclass.index import CaptionRecord, build_index
from vfclass.scoring import (
    ClassifierConfig,
    caption_centroid,
    classify,
    classify_batch,
    fuse,
    text_scores,
    visual_scores,
)


def softmax_oracle(values):
    top = max(values)
    exp = [math.exp(v - top) for v in values]
    total = sum(exp)
    return [e / total for e in exp]


@pytest.fixture(scope="module")
def tagger():
    return LexiconTagger()


class TestVisualScores:
    def test_identical_vector_scores_one(self):
        scores = visual_scores([1.0, 0.0], [[1.0, 0.0], [0.0, 1.0]])
        assert scores[0] == pytest.approx(1.0)
        assert scores[1] == pytest.approx(0.0)

    def test_matches_pairwise_cosine(self):
        rng = np.random.default_rng(40)
        image = rng.standard_normal(8)
        cands = [rng.standard_normal(8) for _ in range(5)]
        scores = visual_scores(image, cands)
        for got, cand in zip(scores, cands):
            assert got == pytest.approx(cosine_similarity(image, cand), abs=1e-9)

    def test_empty_candidates_rejected(self):
        with pytest.raises(EmptyInputError):
            visual_scores([1.0, 0.0], [])

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            visual_scores([1.0, 0.0, 0.0], [[1.0, 0.0]])


class TestCaptionCentroid:
    def test_identical_vectors_mean_is_vector(self):
        v = np.array([0.2, 0.4, 0.6])
        assert np.allclose(caption_centroid([v, v, v]), v)

    def test_two_basis_vectors(self):
        got = caption_centroid([[1.0, 0.0], [0.0, 1.0]])
        assert np.allclose(got, [0.5, 0.5])

    def test_coordinate_wise_mean(self):
        rng = np.random.default_rng(41)
        vecs = [rng.standard_normal(6) for _ in range(10)]
        want = np.stack(vecs).mean(axis=0)
        assert np.allclose(caption_centroid(vecs), want, atol=1e-12)

    def test_empty_list_rejected(self):
        with pytest.raises(EmptyInputError):
            caption_centroid([])


class TestTextScores:
    def test_parallel_candidate(self):
        centroid = [0.5, 0.5]
        scores = text_scores(centroid, [[1.0, 1.0], [1.0, -1.0]])
        assert scores[0] == pytest.approx(1.0)
        assert scores[1] == pytest.approx(0.0)


class TestFuse:
    def test_alpha_one_is_visual_softmax(self):
        vis = [0.9, 0.1, 0.4]
        tex = [0.2, 0.8, 0.3]
        assert fuse(vis, tex, 1.0) == pytest.approx(softmax_oracle(vis), abs=1e-12)

    def test_alpha_zero_is_textual_softmax(self):
        vis = [0.9, 0.1, 0.4]
        tex = [0.2, 0.8, 0.3]
        assert fuse(vis, tex, 0.0) == pytest.approx(softmax_oracle(tex), abs=1e-12)

    def test_singleton_is_one(self):
        for alpha in (0.0, 0.3, 1.0):
            assert fuse([0.7], [0.1], alpha) == [1.0]

    def test_frozen_hand_oracle(self):
        got = fuse([0.9, 0.1], [0.2, 0.8], 0.7)
        vis = softmax_oracle([0.9, 0.1])
        tex = softmax_oracle([0.2, 0.8])
        want = [0.7 * v + 0.3 * t for v, t in zip(vis, tex)]
        assert got == pytest.approx(want, abs=1e-9)
        assert got == pytest.approx([0.5892852449215901, 0.4107147550784099],
                                    abs=1e-9)

    def test_sums_to_one(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            n = int(rng.integers(1, 12))
            vis = rng.uniform(-1, 1, n)
            tex = rng.uniform(-1, 1, n)
            alpha = float(rng.uniform(0, 1))
            assert sum(fuse(vis, tex, alpha)) == pytest.approx(1.0, abs=1e-9)

    def test_shift_invariance(self):
        rng = np.random.default_rng(43)
        for _ in range(50):
            n = int(rng.integers(2, 10))
            vis = rng.uniform(-1, 1, n)
            tex = rng.uniform(-1, 1, n)
            alpha = float(rng.uniform(0, 1))
            base = fuse(vis, tex, alpha)
            shifted = fuse(vis + 0.37, tex - 0.21, alpha)
            assert shifted == pytest.approx(base, abs=1e-9)

    def test_length_mismatch(self):
        with pytest.raises(EmptyInputError):
            fuse([0.1, 0.2], [0.3], 0.5)

    def test_modalities_axis_stays_in_unit_interval(self):
        fused = fuse([0.9, 0.1], [0.2, 0.8], 0.5, axis="modalities")
        assert all(0.0 <= x <= 1.0 for x in fused)


def planted_world(caption_vec, captions=None):
    """Corpus of four captions mentioning dog/cat/park, embeddings planted."""
    captions = captions or ["a dog and a cat in a park"] * 4
    store = PrecomputedStore(4)
    e = np.eye(4)
    store.add("dog", e[0])
    store.add("cat", e[1])
    store.add("park", e[2])
    records = []
    for i, text in enumerate(captions):
        rid = f"cap-{i}"
        records.append(CaptionRecord(rid, text))
        store.add(rid, caption_vec)
    return build_index(records, store), store


class TestClassify:
    def test_visual_only_picks_image_aligned_candidate(self, tagger):
        index, store = planted_world(np.eye(4)[0])
        config = ClassifierConfig(k=4, alpha=1.0)
        pred = classify(np.eye(4)[0], index, store, tagger, config)
        assert pred.label == "dog"
        assert pred.ranked[0].candidate == "dog"
        assert not pred.fallback

    def test_textual_only_follows_centroid(self, tagger):
        # captions embed at cat's vector, image at dog's: alpha=0 - cat
        index, store = planted_world(np.eye(4)[1])
        config = ClassifierConfig(k=4, alpha=0.0)
        pred = classify(np.eye(4)[0], index, store, tagger, config)
        assert pred.label == "cat"

    def test_ranked_covers_candidates_and_is_sorted(self, tagger):
        index, store = planted_world(np.eye(4)[0])
        pred = classify(np.eye(4)[0], index, store, tagger,
                        ClassifierConfig(k=4))
        names = sorted(b.candidate for b in pred.ranked)
        assert names == ["cat", "dog", "park"]
        fused = [b.fused for b in pred.ranked]
        assert fused == sorted(fused, reverse=True)
        assert pred.label == pred.ranked[0].candidate

    def test_fused_is_probability_vector(self, tagger):
        index, store = planted_world(np.eye(4)[0])
        pred = classify(np.eye(4)[0], index, store, tagger,
                        ClassifierConfig(k=4))
        assert sum(b.fused for b in pred.ranked) == pytest.approx(1.0, abs=1e-9)

    def test_deterministic(self, tagger):
        index, store = planted_world(np.eye(4)[0])
        config = ClassifierConfig(k=4, alpha=0.7)
        a = classify(np.eye(4)[0], index, store, tagger, config)
        b = classify(np.eye(4)[0], index, store, tagger, config)
        assert a.label == b.label
        assert [x.fused for x in a.ranked] == [x.fused for x in b.ranked]

    def test_tie_breaks_lexicographically(self, tagger):
        store = PrecomputedStore(4)
        e = np.eye(4)
        store.add("ant", e[0])
        store.add("bee", e[0])  # identical embedding: guaranteed tie
        records = []
        for i in range(2):
            rid = f"cap-{i}"
            records.append(CaptionRecord(rid, "an ant and a bee"))
            store.add(rid, e[0])
        index = build_index(records, store)
        pred = classify(e[0], index, store, tagger, ClassifierConfig(k=2))
        assert pred.label == "ant"

    def test_image_ref_query(self, tagger):
        index, store = planted_world(np.eye(4)[0])
        store.add("img/77", np.eye(4)[0])
        pred = classify("img/77", index, store, tagger, ClassifierConfig(k=4))
        assert pred.label == "dog"

    def test_fallback_label_from_pre_threshold_counts(self, tagger):
        store = PrecomputedStore(4)
        e = np.eye(4)
        store.add("cassowary", e[0])
        records = [CaptionRecord("cap-0", "a spotted cassowary")]
        store.add("cap-0", e[0])
        store.add("spotted", e[1])
        index = build_index(records, store)
        pred = classify(e[0], index, store, tagger, ClassifierConfig(k=1))
        assert pred.fallback
        assert pred.label == "cassowary"  # tie on count 1, lexicographic
        assert len(pred.ranked) == 1

    def test_no_tokens_at_all_raises(self, tagger):
        store = PrecomputedStore(4)
        records = [CaptionRecord("cap-0", "of the and")]
        store.add("cap-0", np.eye(4)[0])
        index = build_index(records, store)
        with pytest.raises(EmptyCandidateSetError):
            classify(np.eye(4)[0], index, store, tagger, ClassifierConfig(k=1))

    def test_prompt_template_changes_lookup_key(self, tagger):
        store = PrecomputedStore(4)
        e = np.eye(4)
        store.add("a photo of a dog", e[0])
        store.add("a photo of a cat", e[1])
        store.add("a photo of a park", e[2])
        records = []
        for i in range(2):
            rid = f"cap-{i}"
            records.append(CaptionRecord(rid, "a dog and a cat in a park"))
            store.add(rid, e[0])
        index = build_index(records, store)
        config = ClassifierConfig(k=2, prompt_template="a photo of a {}")
        pred = classify(e[0], index, store, tagger, config)
        assert pred.label == "dog"


class TestClassifyBatch:
    def world(self):
        rng = np.random.default_rng(50)
        store = PrecomputedStore(4)
        e = np.eye(4)
        store.add("dog", e[0])
        store.add("cat", e[1])
        store.add("park", e[2])
        records = []
        for i in range(6):
            rid = f"cap-{i}"
            records.append(CaptionRecord(rid, "a dog and a cat in a park"))
            vec = e[0] if i % 2 == 0 else e[1]
            store.add(rid, vec)
        index = build_index(records, store)
        queries = []
        for i in range(12):
            qid = f"q{i:02d}"
            vec = e[i % 3] + 0.01 * rng.standard_normal(4)
            queries.append((qid, vec))
        return index, store, queries

    def test_batch_of_one_equals_single(self, tagger):
        index, store, queries = self.world()
        config = ClassifierConfig(k=4)
        [item] = classify_batch(queries[:1], index, store, tagger, config)
        single = classify(queries[0][1], index, store, tagger, config)
        assert item.prediction.label == single.label

    def test_batch_equals_sequential(self, tagger):
        index, store, queries = self.world()
        config = ClassifierConfig(k=4)
        batch = classify_batch(queries, index, store, tagger, config)
        for (qid, q), item in zip(queries, batch):
            assert item.id == qid
            single = classify(q, index, store, tagger, config)
            assert item.prediction.label == single.label
            assert [b.fused for b in item.prediction.ranked] == [
                b.fused for b in single.ranked
            ]

    def test_threaded_matches_serial(self, tagger):
        index, store, queries = self.world()
        config = ClassifierConfig(k=4)
        serial = classify_batch(queries, index, store, tagger, config, threads=1)
        threaded = classify_batch(queries, index, store, tagger, config, threads=4)
        assert [i.prediction.label for i in serial] == [
            i.prediction.label for i in threaded
        ]

    def test_permuted_batch_permutes_results(self, tagger):
        index, store, queries = self.world()
        config = ClassifierConfig(k=4)
        forward = classify_batch(queries, index, store, tagger, config)
        backward = classify_batch(list(reversed(queries)), index, store, tagger,
                                  config)
        assert [i.prediction.label for i in backward] == list(
            reversed([i.prediction.label for i in forward])
        )

    def test_errors_collected_not_fatal(self, tagger):
        index, store, queries = self.world()
        mixed = [("good", queries[0][1]), ("bad", "missing/ref")]
        results = classify_batch(mixed, index, store, tagger,
                                 ClassifierConfig(k=4))
        assert results[0].prediction is not None
        assert results[1].prediction is None
        assert results[1].error_code == "unknown-image-ref"
