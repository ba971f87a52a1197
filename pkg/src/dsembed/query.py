"""k-nearest-neighbor retrieval under the learned similarity.

The similarity between words i and j is Shat_ij = P(word_j | word_i), the
two-step word-topic-word walk probability. Rows of Shat are computed on
demand in O(n*r); the dense n x n matrix is never materialized. A cosine
metric over the raw embedding rows is available for comparison experiments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Vocabulary
from .errors import ConfigError, InputError, PrunedWordError, UnknownWordError, WordLookupError


@dataclass
class NeighborList:
    query: str
    neighbors: list[tuple[str, float]]  # descending similarity, ties by id


def similarity_row(W: np.ndarray, i: int) -> np.ndarray:
    """Row i of Shat = W diag(1/s) W^T; sums to 1 for row-normalized W."""
    n = W.shape[0]
    if not 0 <= i < n:
        raise InputError(f"word id {i} out of range [0, {n})")
    s = W.sum(axis=0)
    return (W[i] / s) @ W.T


def cosine_row(W: np.ndarray, i: int) -> np.ndarray:
    """Cosine similarity of embedding row i against all rows (comparison metric)."""
    n = W.shape[0]
    if not 0 <= i < n:
        raise InputError(f"word id {i} out of range [0, {n})")
    norms = np.linalg.norm(W, axis=1)
    return (W @ W[i]) / (norms * norms[i])


def rank_neighbors(sims: np.ndarray, exclude: int, k: int) -> np.ndarray:
    """Indices of the top-k similarities, excluding one index.

    Ties are broken by ascending index, so rankings are deterministic.
    """
    order = np.lexsort((np.arange(len(sims)), -sims))
    order = order[order != exclude]
    return order[:k]


def _edit_distance(a: str, b: str) -> int:
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def suggest_words(word: str, vocab: Vocabulary, limit: int = 3) -> list[str]:
    """Vocabulary entries nearest to `word` by edit distance (plumbing aid)."""
    scored = sorted(
        range(len(vocab)), key=lambda i: (_edit_distance(word, vocab.words[i]), i)
    )
    return [vocab.words[i] for i in scored[:limit]]


def _resolve_row(vocab: Vocabulary, query: str, active_ids: np.ndarray | None) -> int:
    if query not in vocab:
        raise UnknownWordError(query, suggest_words(query, vocab))
    wid = vocab.id_of(query)
    if active_ids is None:
        return wid
    pos = int(np.searchsorted(active_ids, wid))
    if pos >= len(active_ids) or active_ids[pos] != wid:
        raise PrunedWordError(query)
    return pos


def knn(
    W: np.ndarray,
    vocab: Vocabulary,
    query: str,
    k: int,
    active_ids: np.ndarray | None = None,
    metric: str = "model",
) -> NeighborList:
    """Top-k neighbors of a query word, self excluded.

    `active_ids` maps embedding rows back to vocabulary ids when pruned
    words are absent from the model; rows equal vocabulary ids when None.
    """
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    if metric not in ("model", "cosine"):
        raise ConfigError(f"unknown metric {metric!r}")
    row_i = _resolve_row(vocab, query, active_ids)
    sims = similarity_row(W, row_i) if metric == "model" else cosine_row(W, row_i)
    top = rank_neighbors(sims, row_i, k)
    words = vocab.words
    if active_ids is None:
        pairs = [(words[j], float(sims[j])) for j in top]
    else:
        pairs = [(words[int(active_ids[j])], float(sims[j])) for j in top]
    return NeighborList(query, pairs)


def neighbor_table(
    W: np.ndarray,
    vocab: Vocabulary,
    queries: list[str],
    k: int,
    active_ids: np.ndarray | None = None,
    metric: str = "model",
    with_scores: bool = False,
) -> tuple[str, dict[str, Exception]]:
    """Two-column table: query word, then its comma-separated neighbors.

    Unresolvable queries are collected into the returned error map; the
    table still carries every resolvable row.
    """
    lines = []
    failures: dict[str, Exception] = {}
    for q in queries:
        try:
            result = knn(W, vocab, q, k, active_ids=active_ids, metric=metric)
        except WordLookupError as e:
            failures[q] = e
            continue
        if with_scores:
            cells = [f"{w} ({v:.4f})" for w, v in result.neighbors]
        else:
            cells = [w for w, _ in result.neighbors]
        lines.append(f"{q}\t" + ", ".join(cells))
    return "\n".join(lines), failures
