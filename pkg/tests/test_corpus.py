import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dsembed.corpus import (
    CooccurrenceCounts,
    SimilarityMatrix,
    Vocabulary,
    build_similarity,
    build_vocab,
    count_cooccurrences,
    read_corpus,
    tokenize,
)
from dsembed.errors import ConfigError, InputError


class TestTokenize:
    def test_lowercase_sentence(self):
        assert tokenize("The cat sat.", lowercase=True) == ["the", "cat", "sat"]

    def test_empty(self):
        assert tokenize("") == []

    def test_text8_style_line(self):
        # golden: opening words of the text8 corpus, already lowercase
        assert tokenize("anarchism originated as a term") == [
            "anarchism", "originated", "as", "a", "term",
        ]

    def test_keep_case(self):
        assert tokenize("The Cat", lowercase=False) == ["The", "Cat"]

    def test_underscore_splits(self):
        assert tokenize("foo_bar baz2") == ["foo", "bar", "baz2"]

    def test_invalid_utf8_reports_byte_offset(self, tmp_path):
        p = tmp_path / "bad.txt"
        p.write_bytes(b"abc\xff\xfe")
        with pytest.raises(InputError, match="byte offset 3"):
            read_corpus(p)


class TestVocabulary:
    def test_direct_count(self):
        v = build_vocab(["a", "b", "a"], max_vocab=10)
        assert v.words == ["a", "b"]
        assert v.counts == [2, 1]
        assert v.id_of("a") == 0 and v.id_of("b") == 1

    def test_frequency_order_and_truncation(self):
        v = build_vocab(["a", "b", "a", "c", "c", "c"], max_vocab=2)
        assert v.words == ["c", "a"]

    def test_tie_broken_by_first_appearance(self):
        v = build_vocab(["b", "a", "a", "b"], max_vocab=5)
        assert v.words == ["b", "a"]

    def test_empty_stream_rejected(self):
        with pytest.raises(InputError):
            build_vocab([], max_vocab=5)

    def test_ids_dense_and_consistent(self):
        v = build_vocab(list("abracadabra"), max_vocab=100)
        for i, w in enumerate(v.words):
            assert v.id_of(w) == i
        assert sorted(v.counts, reverse=True) == v.counts

    def test_save_load_round_trip(self, tmp_path):
        v = build_vocab(["x", "y", "x", "z"], max_vocab=10)
        v.save(tmp_path / "vocab.tsv")
        v2 = Vocabulary.load(tmp_path / "vocab.tsv")
        assert v2.words == v.words and v2.counts == v.counts


class TestCooccurrence:
    def _vocab(self, words):
        return Vocabulary(list(words), [1] * len(words))

    def test_adjacent_pairs(self):
        v = self._vocab("ab")
        c = count_cooccurrences(["a", "b", "a"], v, window=1)
        assert c.as_dict() == {(0, 1): 2.0}

    def test_same_id_pair_skipped(self):
        v = self._vocab("ab")
        c = count_cooccurrences(["a", "b", "a"], v, window=2)
        assert c.as_dict() == {(0, 1): 2.0}

    def test_oov_holds_position(self):
        v = self._vocab("ab")
        c = count_cooccurrences(["a", "x", "b"], v, window=2)
        assert c.as_dict() == {(0, 1): 1.0}

    def test_oov_blocks_short_window(self):
        v = self._vocab("ab")
        c = count_cooccurrences(["a", "x", "b"], v, window=1)
        assert c.as_dict() == {}

    def test_window_must_be_positive(self):
        with pytest.raises(ConfigError):
            count_cooccurrences(["a"], self._vocab("a"), window=0)

    @settings(max_examples=200, deadline=None)
    @given(
        tokens=st.lists(st.sampled_from(list("abcdeX")), max_size=30),
        window=st.integers(min_value=1, max_value=6),
    )
    def test_matches_brute_force(self, tokens, window):
        # vocabulary is a..e; X stands in for an out-of-vocabulary token
        vocab = self._vocab("abcde")
        expected = {}
        ids = [vocab.get(t) for t in tokens]
        for t in range(len(tokens)):
            for u in range(len(tokens)):
                if 0 < u - t <= window:
                    i, j = ids[t], ids[u]
                    if i >= 0 and j >= 0 and i != j:
                        key = (min(i, j), max(i, j))
                        expected[key] = expected.get(key, 0.0) + 1.0
        got = count_cooccurrences(tokens, vocab, window)
        assert got.as_dict() == expected

    def test_shard_count_does_not_change_result(self):
        rng = np.random.default_rng(3)
        vocab = self._vocab("abcdefg")
        tokens = [vocab.words[i] for i in rng.integers(0, 7, size=500)]
        base = count_cooccurrences(tokens, vocab, window=4, shards=1).as_dict()
        for shards in (2, 3, 7):
            assert count_cooccurrences(tokens, vocab, window=4, shards=shards).as_dict() == base


class TestBuildSimilarity:
    def _counts(self, n, pairs):
        items = sorted(pairs.items())
        i = np.array([p[0] for p, _ in items], dtype=np.int64)
        j = np.array([p[1] for p, _ in items], dtype=np.int64)
        v = np.array([c for _, c in items], dtype=float)
        return CooccurrenceCounts(n, i, j, v)

    def test_single_pair(self):
        S = build_similarity(self._counts(2, {(0, 1): 5.0}), n=2)
        dense = S.toarray()
        assert dense[0, 1] == 1.0 and dense[1, 0] == 1.0
        assert S.total_mass() == pytest.approx(2.0, rel=1e-9)

    def test_equal_mass_split(self):
        S = build_similarity(self._counts(3, {(0, 1): 1.0, (1, 2): 1.0}), n=3)
        dense = S.toarray()
        for i, j in [(0, 1), (1, 0), (1, 2), (2, 1)]:
            assert dense[i, j] == pytest.approx(0.75)
        assert S.total_mass() == pytest.approx(3.0, rel=1e-9)

    def test_mass_equals_retained_rows(self):
        vocab = Vocabulary(["a", "b", "c"], [3, 2, 1])
        counts = count_cooccurrences(["a", "x", "b"], vocab, window=2)
        S = build_similarity(counts, n=3)
        n_active = 3 - len(S.pruned_ids())
        assert S.total_mass() == pytest.approx(n_active, rel=1e-9)

    def test_exact_symmetry_and_zero_diagonal(self):
        rng = np.random.default_rng(0)
        pairs = {}
        for _ in range(40):
            i, j = sorted(rng.integers(0, 12, size=2))
            if i != j:
                pairs[(int(i), int(j))] = float(rng.integers(1, 9))
        S = build_similarity(self._counts(12, pairs), n=12)
        dense = S.toarray()
        assert np.array_equal(dense, dense.T)
        assert np.all(np.diag(dense) == 0.0)

    def test_pruned_rows_reported_and_compacted(self):
        S = build_similarity(self._counts(4, {(0, 2): 1.0}), n=4)
        assert list(S.pruned_ids()) == [1, 3]
        sub, active = S.compact()
        assert sub.n == 2 and list(active) == [0, 2]
        assert sub.total_mass() == pytest.approx(2.0, rel=1e-9)
        assert len(sub.pruned_ids()) == 0

    def test_empty_counts_rejected(self):
        empty = CooccurrenceCounts(3, np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0))
        with pytest.raises(InputError):
            build_similarity(empty, n=3)

    def test_save_load_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(7)
        pairs = {(int(i), int(i + 1 + k)): float(rng.random())
                 for i in range(5) for k in range(2)}
        S = build_similarity(self._counts(10, {k: v for k, v in pairs.items() if k[1] < 10}), n=10)
        S.save(tmp_path / "sim.txt")
        S2 = SimilarityMatrix.load(tmp_path / "sim.txt")
        assert S2.n == S.n
        assert np.array_equal(S2.toarray(), S.toarray())

    def test_load_rejects_lower_triangle(self, tmp_path):
        p = tmp_path / "bad.txt"
        p.write_text("3 1\n2 1 0.5\n")
        with pytest.raises(InputError, match="i < j"):
            SimilarityMatrix.load(p)


def test_pipeline_determinism():
    text = "the quick brown fox jumps over the lazy dog the fox"
    results = []
    for _ in range(2):
        tokens = tokenize(text)
        vocab = build_vocab(tokens, max_vocab=8)
        counts = count_cooccurrences(tokens, vocab, window=3)
        S = build_similarity(counts, len(vocab))
        results.append((tuple(vocab.words), tuple(vocab.counts), S.toarray().tobytes()))
    assert results[0] == results[1]
