"""Score candidate names against a query and pick the best match.

Each candidate gets two cosine scores: image-to-text (query embedding vs
candidate embedding) and text-to-text (retrieved-caption centroid vs
candidate embedding). A softmax over the candidate axis turns each score
vector into a distribution, and the two are mixed with weight ``alpha`` on
the visual side. The label is the argmax of the fused distribution.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .candidates import FilterConfig, extract_candidates
from .embedding import as_vector, cosine_similarity
from .errors import (
    DimensionMismatchError,
    EmptyCandidateSetError,
    EmptyInputError,
    VfcError,
)
from .index import CaptionIndex, RetrievedCaption, retrieve_topk

FUSION_AXES = ("candidates", "modalities")


@dataclass
class ScoreBreakdown:
    """Per-candidate scores: raw cosines plus the fused probability."""

    candidate: str
    visual: float
    textual: float
    fused: float


@dataclass
class ClassifierConfig:
    k: int = 10
    alpha: float = 0.7
    prompt_template: str = ""
    probes: int | str | None = None
    fusion_axis: str = "candidates"
    filter: FilterConfig = field(default_factory=FilterConfig)

    def __post_init__(self):
        if self.k < 1:
            raise EmptyInputError("k must be >= 1")
        if not 0.0 <= self.alpha <= 1.0:
            raise EmptyInputError("alpha must be in [0, 1]")
        if self.fusion_axis not in FUSION_AXES:
            raise EmptyInputError(f"fusion_axis must be one of {FUSION_AXES}")
        if self.prompt_template and "{}" not in self.prompt_template:
            raise EmptyInputError("prompt_template must contain a {} placeholder")


@dataclass
class Prediction:
    """Chosen label plus the full ranked breakdown and retrieval context."""

    label: str
    ranked: list[ScoreBreakdown]
    retrieved: list[RetrievedCaption]
    fallback: bool = False


@dataclass
class BatchItem:
    id: str
    prediction: Prediction | None = None
    error: str | None = None
    error_code: str | None = None


def _candidate_matrix(vecs) -> np.ndarray:
    if not len(vecs):
        raise EmptyInputError("candidate list must be non-empty")
    rows = [as_vector(v, "candidate vector") for v in vecs]
    dims = {r.shape[0] for r in rows}
    if len(dims) != 1:
        raise DimensionMismatchError(f"mixed candidate dims: {sorted(dims)}")
    return np.stack(rows)


def visual_scores(image_vec, candidate_vecs) -> list[float]:
    """Cosine of the query embedding against each candidate embedding."""
    matrix = _candidate_matrix(candidate_vecs)
    query = as_vector(image_vec, "image vector")
    if query.shape[0] != matrix.shape[1]:
        raise DimensionMismatchError(
            f"image dim {query.shape[0]} != candidate dim {matrix.shape[1]}"
        )
    return [cosine_similarity(query, row) for row in matrix]


def caption_centroid(caption_vecs) -> np.ndarray:
    """Arithmetic mean of the retrieved-caption embeddings (not re-normalized)."""
    matrix = _candidate_matrix(caption_vecs)
    return matrix.mean(axis=0)


def text_scores(centroid, candidate_vecs) -> list[float]:
    """Cosine of the caption centroid against each candidate embedding."""
    return visual_scores(centroid, candidate_vecs)


def softmax(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    shifted = arr - arr.max()
    exp = np.exp(shifted)
    return exp / exp.sum()


def fuse(visual, textual, alpha: float, axis: str = "candidates") -> list[float]:
    """Mix the two score vectors: ``alpha * s(visual) + (1-alpha) * s(textual)``.

    With ``axis="candidates"`` (the default) the softmax runs across the
    candidate set per modality, so the result is a probability vector over
    candidates. ``axis="modalities"`` instead softmaxes each candidate's
    (visual, textual) pair, kept for ablation comparisons.
    """
    vis = np.asarray(visual, dtype=np.float64)
    tex = np.asarray(textual, dtype=np.float64)
    if vis.shape != tex.shape or vis.ndim != 1:
        raise EmptyInputError("visual and textual score lists must have equal length")
    if vis.size == 0:
        raise EmptyInputError("score lists must be non-empty")
    if not 0.0 <= alpha <= 1.0:
        raise EmptyInputError("alpha must be in [0, 1]")
    if axis == "candidates":
        fused = alpha * softmax(vis) + (1.0 - alpha) * softmax(tex)
    elif axis == "modalities":
        pairs = np.stack([vis, tex], axis=1)
        weights = np.exp(pairs - pairs.max(axis=1, keepdims=True))
        weights /= weights.sum(axis=1, keepdims=True)
        fused = alpha * weights[:, 0] + (1.0 - alpha) * weights[:, 1]
    else:
        raise EmptyInputError(f"unknown fusion axis {axis!r}")
    return [float(x) for x in fused]


def _resolve_query(query, provider) -> np.ndarray:
    if isinstance(query, str):
        return as_vector(provider.embed_image(query), "image embedding")
    return as_vector(query, "query embedding")


def _score_candidates(
    names: list[str],
    image_vec: np.ndarray,
    centroid: np.ndarray,
    provider,
    config: ClassifierConfig,
) -> list[ScoreBreakdown]:
    if config.prompt_template:
        texts = [config.prompt_template.format(name) for name in names]
    else:
        texts = list(names)
    cand_vecs = provider.embed_texts(texts)
    vis = visual_scores(image_vec, cand_vecs)
    tex = text_scores(centroid, cand_vecs)
    fused = fuse(vis, tex, config.alpha, config.fusion_axis)
    ranked = [
        ScoreBreakdown(name, v, t, f)
        for name, v, t, f in zip(names, vis, tex, fused)
    ]
    ranked.sort(key=lambda b: (-b.fused, b.candidate))
    return ranked


def classify(
    query,
    index: CaptionIndex,
    provider,
    tagger,
    config: ClassifierConfig | None = None,
) -> Prediction:
    """Assign an open-vocabulary label to one query.

    ``query`` is either an embedding vector or an image ref resolvable by
    the provider. When every candidate is filtered away, the most frequent
    token seen before the count threshold becomes the label and the
    prediction is flagged as a fallback.
    """
    config = config or ClassifierConfig()
    image_vec = _resolve_query(query, provider)
    hits = retrieve_topk(index, image_vec, config.k, config.probes)
    fallback = False
    try:
        candidates = extract_candidates(
            [h.record for h in hits], tagger, config.filter
        )
        names = candidates.names()
    except EmptyCandidateSetError as err:
        if not err.surviving:
            raise
        best = min(err.surviving.items(), key=lambda kv: (-kv[1], kv[0]))
        names = [best[0]]
        fallback = True

    centroid = caption_centroid(index.vectors_for_ids([h.record.id for h in hits]))
    ranked = _score_candidates(names, image_vec, centroid, provider, config)
    return Prediction(ranked[0].candidate, ranked, hits, fallback)


def classify_batch(
    queries,
    index: CaptionIndex,
    provider,
    tagger,
    config: ClassifierConfig | None = None,
    threads: int = 1,
) -> list[BatchItem]:
    """Classify ``(id, query)`` pairs, collecting per-query errors.

    Results keep input order. A failing query yields a BatchItem with the
    error recorded instead of aborting the batch.
    """
    config = config or ClassifierConfig()
    items = list(queries)

    def one(pair) -> BatchItem:
        qid, query = pair
        try:
            return BatchItem(qid, prediction=classify(query, index, provider, tagger, config))
        except VfcError as err:
            return BatchItem(qid, error=str(err), error_code=err.code)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, items))
    return [one(pair) for pair in items]
