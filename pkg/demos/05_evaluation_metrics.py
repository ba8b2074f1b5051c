"""The three open-vocabulary metrics plus vocabulary grounding.

Run: python3 demos/05_evaluation_metrics.py
"""

import numpy as np

from vfclass import (
    HashEmbedder,
    LabeledPrediction,
    cluster_accuracy,
    evaluate_predictions,
    ground_to_vocabulary,
    hungarian,
    semantic_iou,
)

print("== semantic IoU: word-set overlap ==")
pairs = [
    ("cassowary", "cassowary"),
    ("stanford cars", "cars"),
    ("great white shark", "white shark"),
    ("dumpsite", "garbage site"),
]
for pred, truth in pairs:
    print(f"iou({pred!r}, {truth!r}) = {semantic_iou(pred, truth):.3f}")

print("\n== minimum-cost assignment ==")
cost = np.array([
    [2.0, 9.0, 4.0],
    [1.0, 3.0, 8.0],
    [6.0, 2.0, 5.0],
])
pairs = hungarian(cost)
total = sum(cost[r, c] for r, c in pairs)
print(f"cost matrix:\n{cost}")
print(f"optimal pairs {pairs}, total cost {total}")

print("\n== cluster accuracy ==")
# two clean classes plus a free-form synonym cluster for one of them
preds = (
    [LabeledPrediction(f"a{i}", "puppy", "dog") for i in range(6)]
    + [LabeledPrediction(f"b{i}", "kitten", "cat") for i in range(5)]
    + [LabeledPrediction(f"c{i}", "hound", "dog") for i in range(3)]
)
print(f"one-to-one:  {cluster_accuracy(preds, mode='one-to-one'):.3f}"
      "   (three clusters, two labels: one cluster stays unmatched)")
print(f"many-to-one: {cluster_accuracy(preds, mode='many-to-one'):.3f}"
      "   (both dog clusters map to dog)")

print("\n== full report ==")
report = evaluate_predictions(preds, HashEmbedder(32))
print(f"cluster accuracy    {report.cluster_accuracy:.3f}")
print(f"semantic similarity {report.semantic_similarity:.3f}")
print(f"semantic IoU        {report.semantic_iou:.3f}")
print(f"per class: {report.per_class}")

print("\n== grounding a free-form label to a fixed vocabulary ==")
vocabulary = ["dog", "cat", "bird", "fish"]
embedder = HashEmbedder(32)
for label in ["dog", "cat"]:
    grounded = ground_to_vocabulary(label, vocabulary, embedder)
    print(f"{label!r} -> {grounded!r}")
