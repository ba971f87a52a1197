"""Word embeddings on the probability simplex via low-rank doubly
stochastic matrix decomposition with KL-divergence multiplicative updates."""

from .corpus import (
    CooccurrenceCounts,
    SimilarityMatrix,
    Vocabulary,
    build_similarity,
    build_vocab,
    count_cooccurrences,
    tokenize,
)
from .errors import (
    ConfigError,
    DsembedError,
    InputError,
    NumericalCollapseError,
    PrunedWordError,
    UnknownWordError,
    WordLookupError,
)
from .query import NeighborList, knn, neighbor_table, similarity_row
from .solver import (
    TrainConfig,
    TrainResult,
    initialize,
    objective,
    train,
)

__version__ = "0.1.0"
