"""Corpus ingestion: tokenization, frequency-ranked vocabulary, windowed
co-occurrence counting and the normalized sparse similarity matrix.

The similarity matrix is symmetric with zero diagonal and is globally scaled
so its total mass equals the number of rows that carry any co-occurrence
mass. Rows without mass are reported and meant to be pruned (via `compact`)
before training.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, InputError, UnknownWordError

# maximal runs of alphanumeric characters; underscore counts as punctuation
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def read_corpus(path: str | Path) -> str:
    """Read a UTF-8 plain-text corpus file."""
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise InputError(f"cannot read corpus {path}: {e}") from e
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise InputError(f"{path}: invalid UTF-8 at byte offset {e.start}") from e


def tokenize(text: str, lowercase: bool = True) -> list[str]:
    """Split text into maximal alphanumeric runs, optionally case-folded."""
    if lowercase:
        text = text.casefold()
    return _TOKEN_RE.findall(text)


@dataclass
class Vocabulary:
    """Word/id mapping with ids assigned in non-increasing frequency order.

    Ties are broken by first appearance in the token stream, so ids are
    deterministic for a fixed input.
    """

    words: list[str]
    counts: list[int]
    _index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self._index = {w: i for i, w in enumerate(self.words)}
        if len(self._index) != len(self.words):
            raise InputError("vocabulary contains duplicate words")

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self._index

    def id_of(self, word: str) -> int:
        try:
            return self._index[word]
        except KeyError:
            raise UnknownWordError(word) from None

    def get(self, word: str, default: int = -1) -> int:
        return self._index.get(word, default)

    def count_of(self, word: str) -> int:
        return self.counts[self.id_of(word)]

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for word, count in zip(self.words, self.counts):
                f.write(f"{word}\t{count}\n")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        words, counts = [], []
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                line = line.rstrip("\n")
                if not line:
                    continue
                try:
                    word, count = line.split("\t")
                    counts.append(int(count))
                except ValueError:
                    raise InputError(f"{path}:{lineno}: expected 'word<TAB>count'") from None
                words.append(word)
        if not words:
            raise InputError(f"{path}: empty vocabulary file")
        return cls(words, counts)


def build_vocab(tokens: list[str], max_vocab: int) -> Vocabulary:
    """Keep the max_vocab most frequent tokens as the vocabulary."""
    if max_vocab < 1:
        raise ConfigError(f"max_vocab must be >= 1, got {max_vocab}")
    if not tokens:
        raise InputError("cannot build a vocabulary from an empty token stream")
    counts: dict[str, int] = {}
    first_seen: dict[str, int] = {}
    for pos, tok in enumerate(tokens):
        if tok in counts:
            counts[tok] += 1
        else:
            counts[tok] = 1
            first_seen[tok] = pos
    order = sorted(counts, key=lambda w: (-counts[w], first_seen[w]))[:max_vocab]
    return Vocabulary(order, [counts[w] for w in order])


@dataclass
class CooccurrenceCounts:
    """Accumulated counts over unordered in-vocabulary word-id pairs.

    Stored as parallel arrays with pair_i < pair_j; no diagonal entries and
    no explicit zeros.
    """

    n: int
    pair_i: np.ndarray
    pair_j: np.ndarray
    values: np.ndarray

    def __len__(self) -> int:
        return len(self.values)

    def total(self) -> float:
        return float(self.values.sum())

    def as_dict(self) -> dict[tuple[int, int], float]:
        return {
            (int(i), int(j)): float(v)
            for i, j, v in zip(self.pair_i, self.pair_j, self.values)
        }

    def ids_present(self) -> np.ndarray:
        return np.unique(np.concatenate([self.pair_i, self.pair_j]))


def count_cooccurrences(
    tokens: list[str], vocab: Vocabulary, window: int, shards: int = 1
) -> CooccurrenceCounts:
    """Count unordered co-occurrence pairs within a forward window.

    Each position t contributes weight 1 to the pair {id(t), id(t+d)} for
    1 <= d <= window when both tokens are in the vocabulary and have
    different ids. Out-of-vocabulary tokens hold their positions (offsets
    run through them) but generate no pairs. `shards` splits the stream for
    counting; the merged result is independent of the shard count.
    """
    if window < 1:
        raise ConfigError(f"window must be >= 1, got {window}")
    if shards < 1:
        raise ConfigError(f"shards must be >= 1, got {shards}")
    n = len(vocab)
    ids = np.fromiter((vocab.get(t) for t in tokens), dtype=np.int64, count=len(tokens))
    bounds = np.linspace(0, len(ids), shards + 1).astype(np.int64)
    key_parts, cnt_parts = [], []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        for d in range(1, window + 1):
            t_hi = min(int(hi), len(ids) - d)
            if t_hi <= lo:
                continue
            a = ids[lo:t_hi]
            b = ids[lo + d : t_hi + d]
            mask = (a >= 0) & (b >= 0) & (a != b)
            if not mask.any():
                continue
            i = np.minimum(a[mask], b[mask])
            j = np.maximum(a[mask], b[mask])
            keys, cnts = np.unique(i * n + j, return_counts=True)
            key_parts.append(keys)
            cnt_parts.append(cnts)
    if not key_parts:
        empty = np.empty(0, dtype=np.int64)
        return CooccurrenceCounts(n, empty, empty.copy(), np.empty(0))
    keys = np.concatenate(key_parts)
    cnts = np.concatenate(cnt_parts)
    uniq, inverse = np.unique(keys, return_inverse=True)
    # integer-valued float sums are exact, so the merge is shard-order independent
    totals = np.bincount(inverse, weights=cnts.astype(np.float64))
    return CooccurrenceCounts(n, uniq // n, uniq % n, totals)


@dataclass
class SimilarityMatrix:
    """Sparse symmetric nonnegative similarity matrix with zero diagonal.

    Both (i, j) and (j, i) are stored; the on-disk format keeps only i < j.
    """

    mat: sp.csr_matrix

    def __post_init__(self):
        self.mat = self.mat.tocsr()
        self.mat.sum_duplicates()
        self.mat.sort_indices()

    @property
    def n(self) -> int:
        return self.mat.shape[0]

    @property
    def nnz(self) -> int:
        return self.mat.nnz

    def total_mass(self) -> float:
        return float(self.mat.sum())

    def toarray(self) -> np.ndarray:
        return self.mat.toarray()

    def row_nonzeros(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Column ids and values of row i's stored nonzeros."""
        lo, hi = self.mat.indptr[i], self.mat.indptr[i + 1]
        return self.mat.indices[lo:hi], self.mat.data[lo:hi]

    def pruned_ids(self) -> np.ndarray:
        """Row ids with no stored nonzeros."""
        degree = np.diff(self.mat.indptr)
        return np.flatnonzero(degree == 0)

    def compact(self) -> tuple["SimilarityMatrix", np.ndarray]:
        """Drop empty rows/columns; returns the submatrix and retained ids."""
        degree = np.diff(self.mat.indptr)
        active = np.flatnonzero(degree > 0)
        if len(active) == 0:
            raise InputError("similarity matrix has no nonzero rows")
        sub = self.mat[active][:, active].tocsr()
        return SimilarityMatrix(sub), active

    def save(self, path: str | Path) -> None:
        """Write `n nnz` header then one `i j value` line per entry with i < j."""
        coo = self.mat.tocoo()
        upper = coo.row < coo.col
        rows, cols, vals = coo.row[upper], coo.col[upper], coo.data[upper]
        with open(path, "w", encoding="utf-8") as f:
            f.write(f"{self.n} {len(vals)}\n")
            for i, j, v in zip(rows, cols, vals):
                f.write(f"{i} {j} {float(v)!r}\n")

    @classmethod
    def load(cls, path: str | Path) -> "SimilarityMatrix":
        with open(path, encoding="utf-8") as f:
            header = f.readline().split()
            if len(header) != 2:
                raise InputError(f"{path}: expected 'n nnz' header")
            n, nnz = int(header[0]), int(header[1])
            rows = np.empty(nnz, dtype=np.int64)
            cols = np.empty(nnz, dtype=np.int64)
            vals = np.empty(nnz)
            for k in range(nnz):
                parts = f.readline().split()
                if len(parts) != 3:
                    raise InputError(f"{path}: truncated at entry {k}")
                rows[k], cols[k], vals[k] = int(parts[0]), int(parts[1]), float(parts[2])
        if nnz and (rows.min() < 0 or cols.max() >= n):
            raise InputError(f"{path}: entry index out of range")
        if np.any(rows >= cols):
            raise InputError(f"{path}: entries must satisfy i < j (symmetry implied)")
        if np.any(vals <= 0):
            raise InputError(f"{path}: values must be positive")
        mat = sp.coo_matrix(
            (np.concatenate([vals, vals]),
             (np.concatenate([rows, cols]), np.concatenate([cols, rows]))),
            shape=(n, n),
        )
        return cls(mat.tocsr())


def build_similarity(counts: CooccurrenceCounts, n: int) -> SimilarityMatrix:
    """Scale pair counts into a similarity matrix with total mass n'.

    n' is the number of ids that appear in any pair; the global scale makes
    sum_ij S_ij = n', matching the total mass of a doubly stochastic matrix
    over the retained rows.
    """
    if len(counts) == 0:
        raise InputError("no co-occurrence counts: every row would be empty")
    if counts.pair_j.max() >= n:
        raise InputError(
            f"pair id {int(counts.pair_j.max())} out of range for dimension {n}"
        )
    n_active = len(counts.ids_present())
    scale = n_active / (2.0 * counts.total())
    vals = counts.values * scale
    mat = sp.coo_matrix(
        (np.concatenate([vals, vals]),
         (np.concatenate([counts.pair_i, counts.pair_j]),
          np.concatenate([counts.pair_j, counts.pair_i]))),
        shape=(n, n),
    )
    return SimilarityMatrix(mat.tocsr())
