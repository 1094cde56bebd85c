import numpy as np
import pytest

from knac import metrics
from knac.contingency import SplitMatrix, contingency, merge_matrix, split_matrix
from knac.errors import ValidationError
from knac.recommend import (
    MergeRecommendation,
    RecommendParams,
    SplitRecommendation,
    merge_candidates,
    recommend_all,
    render,
    split_candidates,
    split_confidences,
)

from conftest import ds_from_contingency, make_ds


def sm(rows):
    return SplitMatrix(np.asarray(rows, dtype=float), "column")


class TestSplitCandidates:
    def test_direct_threshold(self):
        params = RecommendParams(epsilon_split=0.8, lambda_split=0.0)
        assert split_candidates(sm([[1, 1, 0]]), 0, params) == {0, 1}

    def test_single_survivor(self):
        params = RecommendParams(epsilon_split=0.8, lambda_split=0.0)
        assert split_candidates(sm([[1, 0.5, 0]]), 0, params) == {0}

    def test_lambda_widens_candidates(self):
        params = RecommendParams(epsilon_split=0.8, lambda_split=0.5)
        assert split_candidates(sm([[1, 0.5, 0]]), 0, params) == {0, 1}


class TestSplitConfidences:
    def test_lambda_zero_pure_matrix_function(self):
        ds = ds_from_contingency([[5, 5], [0, 4]])
        h = sm([[1.0, 1.0], [0.0, 1.0]])
        params = RecommendParams(lambda_split=0.0)
        before = metrics.silhouette_call_count()
        rec = split_confidences(ds, 0, {0, 1}, h, params)
        assert metrics.silhouette_call_count() == before  # no silhouette at all
        assert rec.per_candidate_confidence == (1.0, 1.0)
        assert rec.confidence == 1.0
        assert rec.s_dec is None

    def test_confidence_is_mean_of_candidates(self):
        ds = ds_from_contingency([[6, 3], [0, 4]])
        h = sm([[1.0, 0.9], [0.0, 1.0]])
        rec = split_confidences(ds, 0, {0, 1}, h, RecommendParams(lambda_split=0.0))
        assert rec.confidence == pytest.approx(np.mean(rec.per_candidate_confidence), abs=1e-12)
        assert rec.per_candidate_confidence == (1.0, 0.9)

    def test_two_sub_blobs_raise_silhouette_term(self):
        rng = np.random.default_rng(8)
        blob = lambda cx, n: rng.normal((cx, 0.0), 0.3, size=(n, 2))
        feats = np.vstack([blob(0, 30), blob(10, 30), blob(30, 30)])
        expert = np.array([0] * 60 + [1] * 30)
        clusters = np.array([0] * 30 + [1] * 30 + [2] * 30)
        ds = make_ds(feats, expert, clusters)
        m = contingency(ds)
        h = split_matrix(m)
        params = RecommendParams(lambda_split=0.5, seed=0)
        rec = split_confidences(ds, 0, {0, 1}, h, params)
        assert rec.s_dec is not None and rec.s_dec > 0.5  # split improves structure
        for j, conf in zip(rec.candidates, rec.per_candidate_confidence):
            assert conf > 0.5 * h.values[0][j]

    def test_fewer_than_two_candidates_rejected(self):
        ds = ds_from_contingency([[5, 5]])
        with pytest.raises(ValidationError):
            split_confidences(ds, 0, {0}, sm([[1, 1]]), RecommendParams())


class TestMergeCandidates:
    def test_known_cosine_pair(self):
        ds = ds_from_contingency([[10, 2], [9, 3]])
        mm = merge_matrix(contingency(ds))
        params = RecommendParams(epsilon_merge=0.95, lambda_merge=0.0)
        recs = merge_candidates(ds, mm, params)
        assert len(recs) == 1
        rec = recs[0]
        assert rec.pair == (0, 1)
        assert rec.confidence == pytest.approx(0.9923, abs=1e-4)
        assert rec.target_cluster == 0  # column sums 19 vs 5

    def test_identical_distributions_confidence_one(self):
        ds = ds_from_contingency([[7, 3], [7, 3]])
        mm = merge_matrix(contingency(ds))
        recs = merge_candidates(ds, mm, RecommendParams(lambda_merge=0.0))
        assert recs[0].confidence == pytest.approx(1.0, abs=1e-12)

    def test_threshold_above_max_gives_empty(self):
        ds = ds_from_contingency([[7, 3], [7, 3]])
        mm = merge_matrix(contingency(ds))
        params = RecommendParams(epsilon_merge=1.01, lambda_merge=0.0)
        assert merge_candidates(ds, mm, params) == []

    def test_confidence_blends_linkage_term(self):
        ds = ds_from_contingency([[8, 2], [7, 3]], spread=10.0)
        mm = merge_matrix(contingency(ds))
        params = RecommendParams(epsilon_merge=0.0, lambda_merge=0.4)
        recs = merge_candidates(ds, mm, params)
        rec = recs[0]
        expected = 0.6 * rec.sim_term + 0.4 * rec.linkage_term
        assert rec.confidence == pytest.approx(expected, abs=1e-12)

    def test_sorted_by_confidence_descending(self):
        ds = ds_from_contingency([[9, 1, 0], [8, 2, 0], [0, 5, 5]])
        mm = merge_matrix(contingency(ds))
        recs = merge_candidates(ds, mm, RecommendParams(epsilon_merge=0.0,
                                                        lambda_merge=0.0))
        confs = [r.confidence for r in recs]
        assert confs == sorted(confs, reverse=True)
        assert all(r.confidence > 0.0 for r in recs)


class TestMonotonicity:
    def test_raising_thresholds_never_adds(self):
        rng = np.random.default_rng(9)
        for _ in range(10):
            counts = rng.integers(0, 20, size=(4, 4)) + np.diag(rng.integers(5, 25, size=4))
            ds = ds_from_contingency(counts)
            previous_splits, previous_merges = None, None
            for eps in (0.2, 0.5, 0.8, 0.95):
                params = RecommendParams(epsilon_split=eps, epsilon_merge=eps,
                                         lambda_split=0.0, lambda_merge=0.0)
                _, _, _, splits, merges = recommend_all(ds, params)
                split_keys = {(s.expert_label, s.candidates) for s in splits}
                merge_keys = {m.pair for m in merges}
                if previous_splits is not None:
                    assert all(
                        any(k[0] == p[0] and set(k[1]) <= set(p[1]) for p in previous_splits)
                        for k in split_keys)
                    assert merge_keys <= previous_merges
                previous_splits, previous_merges = split_keys, merge_keys

    def test_every_emitted_merge_clears_threshold(self):
        ds = ds_from_contingency([[9, 1], [8, 2], [1, 9]])
        params = RecommendParams(epsilon_merge=0.3, lambda_merge=0.2)
        _, _, _, _, merges = recommend_all(ds, params)
        assert all(m.confidence > params.epsilon_merge for m in merges)

    def test_every_split_has_at_least_two_candidates(self):
        ds = ds_from_contingency([[5, 5, 5], [0, 0, 9]])
        _, _, _, splits, _ = recommend_all(ds, RecommendParams(lambda_split=0.0))
        assert all(len(s.candidates) >= 2 for s in splits)


class TestRender:
    def test_split_block_golden(self):
        rec = SplitRecommendation(1, (1, 2), (0.87, 0.87), 0.87)
        assert render(rec) == (
            "SPLIT\n"
            "    EXPERT CLUSTER E_1\n"
            "INTO\n"
            "    CLUSTERS [(C_1, C_2)] (Confidence 0.87)"
        )

    def test_merge_block_golden(self):
        rec = MergeRecommendation((0, 3), 0, 0.98, 0.98, 0.0)
        assert render(rec) == (
            "MERGE\n"
            "    EXPERT CLUSTER E_0\n"
            "WITH\n"
            "    EXPERT CLUSTER E_3\n"
            "INTO\n"
            "    CLUSTER C_0 (Confidence 0.98)"
        )

    def test_confidence_two_decimals(self):
        rec = SplitRecommendation(0, (0, 1), (1.0, 1.0), 1.0)
        assert render(rec).endswith("(Confidence 1.00)")

    def test_names_flow_through_dataset_map(self):
        ds = make_ds(np.zeros((4, 1)), [0, 0, 1, 1], [0, 1, 0, 1])
        named = ds.with_expert_labels(ds.expert_labels,
                                      {"cutting": 0, "idle": 1})
        rec = MergeRecommendation((0, 1), 1, 0.9, 0.9, 0.0)
        text = render(rec, named)
        assert "EXPERT CLUSTER cutting" in text
        assert "EXPERT CLUSTER idle" in text
        assert "CLUSTER C_1" in text


class TestParams:
    def test_lambda_split_one_rejected(self):
        with pytest.raises(ValidationError):
            RecommendParams(lambda_split=1.0)

    def test_unknown_linkage_rejected(self):
        with pytest.raises(ValidationError):
            RecommendParams(linkage="ward")
