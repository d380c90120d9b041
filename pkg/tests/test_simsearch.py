import math

import numpy as np
import pytest

from socialtyper.embedstore import EmbeddingSet
from socialtyper.simsearch import (
    SimilarityError,
    averaged_topk,
    concat_topk,
    cosine,
    rerank,
    topk,
)

from oracles import cosine_oracle, rerank_oracle, topk_oracle


def _random_set(rng, n, dim):
    return {f"e{i:03d}": rng.standard_normal(dim) for i in range(n)}


class TestCosine:
    def test_identical_vectors(self):
        assert cosine([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal(self):
        assert cosine([1.0, 0.0], [0.0, 1.0]) == 0.0

    def test_forty_five_degrees(self):
        assert cosine([1.0, 0.0], [1.0, 1.0]) == pytest.approx(
            math.sqrt(0.5), abs=1e-12
        )

    def test_zero_vector_rejected(self):
        with pytest.raises(SimilarityError):
            cosine([0.0, 0.0], [1.0, 0.0])

    def test_dim_mismatch_rejected(self):
        with pytest.raises(SimilarityError):
            cosine([1.0], [1.0, 2.0])

    def test_bounded(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            u = rng.standard_normal(5)
            v = rng.standard_normal(5)
            assert -1.0 - 1e-12 <= cosine(u, v) <= 1.0 + 1e-12

    def test_scale_invariance(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            u = rng.standard_normal(4)
            v = rng.standard_normal(4)
            c = float(rng.uniform(0.001, 1000.0))
            assert cosine(c * u, v) == pytest.approx(cosine(u, v), abs=1e-12)

    def test_matches_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            u = rng.standard_normal(6)
            v = rng.standard_normal(6)
            assert cosine(u, v) == pytest.approx(
                cosine_oracle(u.tolist(), v.tolist()), abs=1e-12
            )


class TestTopk:
    def test_three_entity_hand_fixture(self):
        entries = {
            "q": np.array([1.0, 0.0]),
            "a": np.array([1.0, 0.1]),
            "b": np.array([0.0, 1.0]),
            "c": np.array([1.0, -0.1]),
        }
        es = EmbeddingSet(entries)
        ranking = topk("q", es, 3)
        expected = topk_oracle("q", {k: v.tolist() for k, v in entries.items()}, 3)
        assert list(ranking.ids()) == [eid for eid, _ in expected]
        for (got_id, got_score), (want_id, want_score) in zip(ranking.entries, expected):
            assert got_id == want_id
            assert got_score == pytest.approx(want_score, abs=1e-12)

    def test_k_larger_than_pool(self):
        es = EmbeddingSet({"q": [1.0, 0.0], "a": [0.5, 0.5]})
        ranking = topk("q", es, 50)
        assert ranking.ids() == ("a",)

    def test_colinear_candidate_scores_one(self):
        es = EmbeddingSet({"q": [2.0, 0.0], "a": [4.0, 0.0], "b": [0.0, 1.0]})
        ranking = topk("q", es, 1)
        assert ranking.entries[0][0] == "a"
        assert ranking.entries[0][1] == pytest.approx(1.0, abs=1e-12)

    def test_unknown_query_rejected(self):
        es = EmbeddingSet({"a": [1.0]})
        with pytest.raises(SimilarityError, match="missing|unknown"):
            topk("zzz", es, 1)

    def test_k_below_one_rejected(self):
        es = EmbeddingSet({"a": [1.0], "b": [2.0]})
        with pytest.raises(SimilarityError):
            topk("a", es, 0)

    def test_exact_ties_break_by_ascending_id(self):
        es = EmbeddingSet(
            {"q": [1.0, 0.0], "z": [2.0, 0.0], "a": [2.0, 0.0], "m": [0.0, 1.0]}
        )
        ranking = topk("q", es, 3)
        assert list(ranking.ids()) == ["a", "z", "m"]

    def test_scores_non_increasing_and_query_excluded(self):
        rng = np.random.default_rng(4)
        es = EmbeddingSet(_random_set(rng, 30, 5))
        ranking = topk("e007", es, 10)
        assert "e007" not in ranking.ids()
        scores = [s for _, s in ranking.entries]
        assert all(a >= b for a, b in zip(scores, scores[1:]))

    def test_matches_exhaustive_oracle_on_random_sets(self):
        rng = np.random.default_rng(5)
        for trial in range(15):
            n = int(rng.integers(2, 60))
            entries = _random_set(rng, n, int(rng.integers(2, 8)))
            es = EmbeddingSet(entries)
            query = f"e{int(rng.integers(0, n)):03d}"
            k = int(rng.integers(1, n + 3))
            got = topk(query, es, k)
            want = topk_oracle(query, {k_: v.tolist() for k_, v in entries.items()}, k)
            assert list(got.ids()) == [eid for eid, _ in want]

    def test_zero_vector_candidate_rejected(self):
        es = EmbeddingSet({"q": [1.0], "z": [0.0]})
        with pytest.raises(SimilarityError, match="'z'"):
            topk("q", es, 1)


class TestRerank:
    def test_two_stage_fixture(self):
        # First space prefers a, b, c; second space rescores them c > a > b.
        first = EmbeddingSet(
            {
                "q": [1.0, 0.0],
                "a": [1.0, 0.05],
                "b": [1.0, 0.1],
                "c": [1.0, 0.2],
                "d": [-1.0, 0.0],
            }
        )
        second = EmbeddingSet(
            {
                "q": [1.0, 0.0, 0.0],
                "a": [1.0, 1.0, 0.0],
                "b": [0.0, 1.0, 1.0],
                "c": [1.0, 0.1, 0.0],
                "d": [1.0, 0.0, 0.0],
            }
        )
        ranking = rerank("q", first, second, 3)
        expected = rerank_oracle(
            "q",
            {eid: first.vector(eid).tolist() for eid in first.ids},
            {eid: second.vector(eid).tolist() for eid in second.ids},
            3,
        )
        assert list(ranking.ids()) == [eid for eid, _ in expected] == ["c", "a", "b"]

    def test_k_one(self):
        first = EmbeddingSet({"q": [1.0, 0.0], "a": [1.0, 0.1], "b": [0.0, 1.0]})
        second = EmbeddingSet({"q": [1.0], "a": [1.0], "b": [1.0]})
        ranking = rerank("q", first, second, 1)
        assert ranking.ids() == ("a",)

    def test_second_equals_first_matches_topk(self):
        rng = np.random.default_rng(6)
        es = EmbeddingSet(_random_set(rng, 25, 4))
        a = topk("e003", es, 8)
        b = rerank("e003", es, es, 8)
        assert a.ids() == b.ids()
        for (_, sa), (_, sb) in zip(a.entries, b.entries):
            assert sa == pytest.approx(sb, abs=1e-12)

    def test_query_missing_from_either_space_rejected(self):
        first = EmbeddingSet({"q": [1.0], "a": [1.0]})
        second = EmbeddingSet({"a": [1.0]})
        with pytest.raises(SimilarityError, match="second"):
            rerank("q", first, second, 1)
        with pytest.raises(SimilarityError, match="first"):
            rerank("zzz", first, first, 1)

    def test_empty_overlap_gives_warning(self):
        first = EmbeddingSet({"q": [1.0], "a": [1.0]})
        second = EmbeddingSet({"q": [1.0], "z": [1.0]})
        ranking = rerank("q", first, second, 5)
        assert ranking.entries == ()
        assert ranking.warning is not None

    def test_output_subset_of_stage_one(self):
        rng = np.random.default_rng(7)
        first = EmbeddingSet(_random_set(rng, 40, 4))
        second_entries = _random_set(rng, 40, 6)
        # Drop some ids from the second space.
        for i in range(0, 40, 5):
            second_entries.pop(f"e{i:03d}", None)
        second_entries["e001"] = rng.standard_normal(6)
        second = EmbeddingSet(second_entries)
        k = 10
        pool = set(topk("e001", first, k).ids())
        ranking = rerank("e001", first, second, k)
        assert set(ranking.ids()) <= pool
        assert sorted(ranking.ids()) == sorted(set(ranking.ids()))
        scores = [s for _, s in ranking.entries]
        assert all(a >= b for a, b in zip(scores, scores[1:]))

    def test_matches_two_stage_oracle_on_random_sets(self):
        rng = np.random.default_rng(8)
        for _ in range(10):
            n = int(rng.integers(3, 40))
            first_entries = _random_set(rng, n, 4)
            second_entries = _random_set(rng, n, 3)
            for i in range(0, n, 4):
                if f"e{i:03d}" != "e000":
                    second_entries.pop(f"e{i:03d}", None)
            first = EmbeddingSet(first_entries)
            second = EmbeddingSet(second_entries)
            got = rerank("e000", first, second, 7)
            want = rerank_oracle(
                "e000",
                {k: v.tolist() for k, v in first_entries.items()},
                {k: v.tolist() for k, v in second_entries.items()},
                7,
            )
            assert list(got.ids()) == [eid for eid, _ in want]


class TestVariants:
    def test_concat_uses_both_spaces(self):
        first = EmbeddingSet({"q": [1.0, 0.0], "a": [1.0, 0.0], "b": [0.0, 1.0]})
        second = EmbeddingSet({"q": [1.0], "a": [1.0], "b": [1.0]})
        ranking = concat_topk("q", first, second, 2)
        assert ranking.ids()[0] == "a"

    def test_average_weight_validation(self):
        es = EmbeddingSet({"q": [1.0], "a": [1.0]})
        with pytest.raises(SimilarityError):
            averaged_topk("q", es, es, 1, weight=1.5)

    def test_average_interpolates(self):
        first = EmbeddingSet({"q": [1.0, 0.0], "a": [1.0, 0.0], "b": [0.0, 1.0]})
        second = EmbeddingSet({"q": [0.0, 1.0], "a": [0.0, 1.0], "b": [1.0, 0.0]})
        ranking = averaged_topk("q", first, second, 2, weight=0.5)
        by_id = dict(ranking.entries)
        assert by_id["a"] == pytest.approx(1.0, abs=1e-12)
        assert by_id["b"] == pytest.approx(0.0, abs=1e-12)
