"""Embedding primitives: cosine similarity, normalization, the binary store.

Run: python3 demos/01_embeddings_and_store.py
"""

import tempfile
from pathlib import Path

import numpy as np

from vfclass import (
    PrecomputedStore,
    cosine_similarity,
    hashed_vector,
    load_store,
    normalize,
    save_store,
)

print("== unit normalization ==")
v = [3.0, 4.0]
print(f"normalize({v}) -> {normalize(v)}")

print("\n== cosine similarity ==")
pairs = [
    ([1, 0], [1, 0]),
    ([1, 0], [0, 1]),
    ([1, 2, 3], [4, 5, 6]),
    ([1, 0], [-1, 0]),
]
for a, b in pairs:
    print(f"cos{a, b} = {cosine_similarity(a, b):+.6f}")

print("\n== precomputed store ==")
rng = np.random.default_rng(0)
store = PrecomputedStore(dim=8, identity="demo-store")
for word in ["dog", "cat", "bird"]:
    store.add(word, normalize(rng.standard_normal(8)))
store.add("img/0001", store.vector("dog") * 0.99 + 0.01)

[dog] = store.embed_texts(["dog"])
image = store.embed_image("img/0001")
print(f"store holds {len(store)} vectors of dim {store.dim}")
print(f"cos(image, dog)  = {cosine_similarity(image, dog):.4f}")
print(f"cos(image, cat)  = {cosine_similarity(image, store.vector('cat')):.4f}")

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "demo.vfce"
    save_store(store, path)
    loaded = load_store(path)
    same = all(
        np.array_equal(loaded.vector(k), store.vector(k)) for k in store.keys()
    )
    print(f"saved {path.stat().st_size} bytes, reload bit-identical: {same}")

print("\n== deterministic hash vectors ==")
a = hashed_vector("a striped cat", "text", 6)
b = hashed_vector("a striped cat", "text", 6)
print(f"same input twice -> identical: {np.array_equal(a, b)}")
print(f"vector: {np.round(a, 4)}")
