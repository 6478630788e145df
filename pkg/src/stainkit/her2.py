"""HER2-level semantic evaluation over externally supplied feature vectors.

Generated-image features are retrieved against a library of ground-truth
features by cosine distance (1 - cosine similarity). Retrieval quality is
summarized as top-k accuracy (a hit when any of the k nearest library
records carries the query's HER2 level) and as kNN majority-vote
classification accuracy. Scans are exact and brute-force; libraries in the
hundreds to low thousands of records need no index.

Feature CSV format: header ``id,label,f0..f{d-1}``; labels are HER2 levels
in {0, 1, 2, 3}.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

HER2_LEVELS = (0, 1, 2, 3)


@dataclass(frozen=True)
class FeatureRecord:
    id: str
    label: int
    vector: np.ndarray

    def __post_init__(self) -> None:
        if self.label not in HER2_LEVELS:
            raise ValueError(f"label must be a HER2 level in 0..3, got {self.label}")
        vec = np.array(self.vector, dtype=np.float64, copy=True)
        if vec.ndim != 1 or vec.size < 1:
            raise ValueError("feature vector must be 1-D and non-empty")
        if not np.all(np.isfinite(vec)):
            raise ValueError(f"feature vector of {self.id!r} must be finite")
        if not np.any(vec):
            raise ValueError(f"feature vector of {self.id!r} must be non-zero")
        vec.flags.writeable = False
        object.__setattr__(self, "vector", vec)


@dataclass(frozen=True)
class FeatureLibrary:
    """An ordered, immutable collection of uniform-dimension feature records."""

    records: tuple[FeatureRecord, ...]

    def __post_init__(self) -> None:
        records = tuple(self.records)
        if not records:
            raise ValueError("feature library must be non-empty")
        dim = records[0].vector.size
        if any(r.vector.size != dim for r in records):
            raise ValueError("feature vectors must share one dimension")
        ids = [r.id for r in records]
        if len(set(ids)) != len(ids):
            raise ValueError("record ids must be unique")
        object.__setattr__(self, "records", records)
        matrix = np.stack([r.vector for r in records])
        object.__setattr__(self, "_matrix", matrix)
        object.__setattr__(self, "_norms", np.linalg.norm(matrix, axis=1))

    @property
    def dimension(self) -> int:
        return self.records[0].vector.size

    def __len__(self) -> int:
        return len(self.records)


def load_feature_library(path: str | Path) -> FeatureLibrary:
    """Parse a feature CSV into a validated library."""
    return FeatureLibrary(tuple(_read_feature_rows(path)))


def load_feature_records(path: str | Path) -> list[FeatureRecord]:
    """Parse a feature CSV into records (query sets need no library invariants)."""
    return _read_feature_rows(path)


def _read_feature_rows(path: str | Path) -> list[FeatureRecord]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"empty feature CSV: {path}")
    header = [c.strip() for c in rows[0]]
    if len(header) < 3 or header[0] != "id" or header[1] != "label":
        raise ValueError(f"feature CSV header must be id,label,f0..: {path}")
    dim = len(header) - 2
    records = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue  # tolerate blank lines
        if len(row) != dim + 2:
            raise ValueError(
                f"{path}:{lineno}: expected {dim + 2} fields, got {len(row)}"
            )
        try:
            label = int(row[1])
            vector = np.array([float(v) for v in row[2:]])
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: malformed row ({exc})") from None
        try:
            records.append(FeatureRecord(id=row[0], label=label, vector=vector))
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
    return records


def _cosine_distances(lib: FeatureLibrary, query: np.ndarray) -> np.ndarray:
    query = np.asarray(query, dtype=np.float64)
    if query.ndim != 1 or query.size != lib.dimension:
        raise ValueError(
            f"query dimension {query.shape} does not match library dimension {lib.dimension}"
        )
    qn = float(np.linalg.norm(query))
    if qn == 0.0:
        raise ValueError("query vector must be non-zero")
    matrix = getattr(lib, "_matrix")
    norms = getattr(lib, "_norms")
    sims = (matrix @ query) / (norms * qn)
    return np.clip(1.0 - sims, 0.0, 2.0)


def nearest_neighbors(
    lib: FeatureLibrary, query: np.ndarray, k: int
) -> list[tuple[str, int, float]]:
    """The k library records closest to the query by cosine distance.

    Returned as (id, label, distance) in ascending distance; exact ties
    are broken by ascending id so results are reproducible regardless of
    record order.
    """
    if k < 1 or k > len(lib):
        raise ValueError(f"k must lie in 1..{len(lib)}, got {k}")
    dist = _cosine_distances(lib, query)
    order = sorted(range(len(lib)), key=lambda i: (dist[i], lib.records[i].id))
    return [
        (lib.records[i].id, lib.records[i].label, float(dist[i])) for i in order[:k]
    ]


def topk_accuracy(
    lib: FeatureLibrary, queries: Sequence[FeatureRecord], ks: Iterable[int]
) -> dict[int, float]:
    """For each k: the fraction of queries whose k nearest records include
    at least one with the query's label."""
    ks = sorted(set(int(k) for k in ks))
    if not queries:
        raise ValueError("queries must be non-empty")
    if not ks:
        raise ValueError("at least one k is required")
    hits = {k: 0 for k in ks}
    k_max = ks[-1]
    for query in queries:
        labels = [label for _, label, _ in nearest_neighbors(lib, query.vector, k_max)]
        for k in ks:
            if query.label in labels[:k]:
                hits[k] += 1
    return {k: hits[k] / len(queries) for k in ks}


def knn_classify(lib: FeatureLibrary, query: np.ndarray, k: int) -> int:
    """Majority HER2 level among the k nearest records.

    Vote ties are broken by the smaller summed distance among tied labels,
    then by the smaller label value.
    """
    neighbors = nearest_neighbors(lib, query, k)
    votes: dict[int, int] = {}
    dist_sums: dict[int, float] = {}
    for _, label, dist in neighbors:
        votes[label] = votes.get(label, 0) + 1
        dist_sums[label] = dist_sums.get(label, 0.0) + dist
    return min(votes, key=lambda label: (-votes[label], dist_sums[label], label))


def knn_accuracy(
    lib: FeatureLibrary, queries: Sequence[FeatureRecord], k: int
) -> float:
    """Fraction of queries whose kNN majority vote matches their label."""
    if not queries:
        raise ValueError("queries must be non-empty")
    correct = sum(
        1 for q in queries if knn_classify(lib, q.vector, k) == q.label
    )
    return correct / len(queries)


def accuracy_report(
    lib: FeatureLibrary,
    queries: Sequence[FeatureRecord],
    ks: Iterable[int],
    knn_k: int,
) -> dict:
    """The JSON-shaped accuracy summary consumed by the CLI."""
    topk = topk_accuracy(lib, queries, ks)
    return {
        "topk": {str(k): v for k, v in topk.items()},
        "knn": {"k": knn_k, "accuracy": knn_accuracy(lib, queries, knn_k)},
    }
