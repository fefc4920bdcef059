"""Tests for scaling, MI selection, projection, grid search, and the
end-to-end URL pipeline."""

from __future__ import annotations

import math
from collections import Counter

import numpy as np
import pytest

from urlsleuth.charlm import LmScorePair
from urlsleuth.errors import ArtifactError, ConfigError, DataError
from urlsleuth.models import ModelSpec
from urlsleuth.pipeline import (
    MI_BIN_COUNT,
    PipelineArtifact,
    apply_projection,
    apply_scaler,
    apply_selector,
    fit_pipeline,
    fit_projection,
    fit_scaler,
    fit_selector,
    grid_search,
    load_pipeline,
    mutual_information,
    pipeline_from_dict,
    pipeline_to_dict,
    save_pipeline,
)
from urlsleuth.urlfeat import extract_matrix


def mi_oracle(col: np.ndarray, y: np.ndarray, n_bins: int = MI_BIN_COUNT) -> float:
    """Independent MI computation from explicit probability tables."""
    edges = np.quantile(col, np.linspace(0.0, 1.0, n_bins + 1)[1:-1])
    bins = np.searchsorted(edges, col, side="right")
    n = len(y)
    joint = Counter(zip(bins.tolist(), y.tolist()))
    marg_b = Counter(bins.tolist())
    marg_y = Counter(y.tolist())
    mi = 0.0
    for (b, lab), c in joint.items():
        mi += (c / n) * math.log((c / n) / ((marg_b[b] / n) * (marg_y[lab] / n)))
    return max(0.0, mi)


class TestScaler:
    def test_two_point_column(self):
        s = fit_scaler(np.array([[0.0], [2.0]]))
        assert s.mean[0] == 1.0
        assert s.std[0] == 1.0  # population std of {0, 2}
        out = apply_scaler(s, np.array([[0.0], [2.0]]))
        np.testing.assert_allclose(out.ravel(), [-1.0, 1.0])

    def test_constant_column_centered_not_divided(self):
        s = fit_scaler(np.array([[5.0, 1.0], [5.0, 3.0]]))
        assert s.std[0] == 1.0
        out = apply_scaler(s, np.array([[5.0, 2.0]]))
        assert out[0, 0] == 0.0

    def test_mean_row_maps_to_zero(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(30, 4))
        s = fit_scaler(x)
        np.testing.assert_allclose(apply_scaler(s, x.mean(axis=0)[None, :]), 0.0, atol=1e-12)

    def test_scaled_train_matrix_is_standardized(self):
        rng = np.random.default_rng(2)
        x = rng.normal(loc=3.0, scale=2.5, size=(100, 3))
        z = apply_scaler(fit_scaler(x), x)
        np.testing.assert_allclose(z.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(z.std(axis=0), 1.0, atol=1e-12)

    def test_too_few_rows_rejected(self):
        with pytest.raises(DataError, match="2 rows"):
            fit_scaler(np.array([[1.0, 2.0]]))

    def test_width_mismatch_rejected(self):
        s = fit_scaler(np.ones((3, 2)))
        with pytest.raises(DataError, match="columns"):
            apply_scaler(s, np.ones((3, 5)))


class TestSelector:
    def test_perfect_feature_has_label_entropy_mi(self):
        y = np.array([0, 1] * 100)
        col = y.astype(np.float64)
        edges = np.quantile(col, np.linspace(0.0, 1.0, MI_BIN_COUNT + 1)[1:-1])
        bins = np.searchsorted(edges, col, side="right")
        assert mutual_information(bins, y) == pytest.approx(math.log(2), abs=1e-12)

    def test_constant_feature_has_zero_mi(self):
        y = np.array([0, 1] * 50)
        bins = np.zeros(100, dtype=np.int64)
        assert mutual_information(bins, y) == 0.0

    def test_independent_feature_has_near_zero_mi(self):
        rng = np.random.default_rng(3)
        y = (rng.random(4000) > 0.5).astype(np.int64)
        col = rng.normal(size=4000)
        edges = np.quantile(col, np.linspace(0.0, 1.0, MI_BIN_COUNT + 1)[1:-1])
        bins = np.searchsorted(edges, col, side="right")
        assert mutual_information(bins, y) < 0.01

    def test_scores_match_brute_force_oracle(self):
        rng = np.random.default_rng(4)
        x = np.hstack(
            [
                rng.normal(size=(120, 6)),
                rng.integers(0, 3, size=(120, 4)).astype(np.float64),
                np.ones((120, 2)),
            ]
        )
        y = (x[:, 0] + x[:, 6] > 0.7).astype(np.int64)
        sel = fit_selector(x, y, top_k=12)
        for j in range(x.shape[1]):
            assert sel.score_per_feature[j] == pytest.approx(
                mi_oracle(x[:, j], y), abs=1e-9
            ), f"feature {j}"

    def test_top_k_keeps_best_features_in_index_order(self):
        rng = np.random.default_rng(5)
        y = (rng.random(300) > 0.5).astype(np.int64)
        noise = rng.normal(size=(300, 3))
        signal = y[:, None] + 0.01 * rng.normal(size=(300, 1))
        x = np.hstack([noise[:, :2], signal, noise[:, 2:]])
        sel = fit_selector(x, y, top_k=1)
        assert sel.retained_indices.tolist() == [2]

    def test_retained_indices_sorted_ascending(self):
        rng = np.random.default_rng(6)
        x = rng.normal(size=(200, 8))
        y = (x[:, 5] + x[:, 1] > 0).astype(np.int64)
        sel = fit_selector(x, y, top_k=4)
        kept = sel.retained_indices.tolist()
        assert kept == sorted(kept)

    def test_tied_scores_prefer_lower_index(self):
        y = np.array([0, 1] * 60)
        col = y.astype(np.float64)
        x = np.column_stack([col, col, col])
        sel = fit_selector(x, y, top_k=2)
        assert sel.retained_indices.tolist() == [0, 1]

    def test_top_k_equal_to_width_is_identity(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=(50, 5))
        y = (rng.random(50) > 0.5).astype(np.int64)
        sel = fit_selector(x, y, top_k=5)
        assert sel.retained_indices.tolist() == [0, 1, 2, 3, 4]
        np.testing.assert_array_equal(apply_selector(sel, x), x)

    def test_oversized_top_k_warns_and_clamps(self):
        x = np.random.default_rng(8).normal(size=(40, 3))
        y = np.array([0, 1] * 20)
        with pytest.warns(UserWarning, match="clamping"):
            sel = fit_selector(x, y, top_k=10)
        assert len(sel.retained_indices) == 3

    def test_nonpositive_top_k_rejected(self):
        x = np.ones((4, 2))
        y = np.array([0, 1, 0, 1])
        with pytest.raises(ConfigError, match="top_k"):
            fit_selector(x, y, top_k=0)


class TestProjection:
    def test_components_are_orthonormal(self):
        rng = np.random.default_rng(9)
        x = rng.normal(size=(60, 5)) @ rng.normal(size=(5, 5))
        proj = fit_projection(x, variance_target=1.0)
        gram = proj.components @ proj.components.T
        np.testing.assert_allclose(gram, np.eye(len(proj.components)), atol=1e-9)

    def test_explained_variance_non_increasing(self):
        rng = np.random.default_rng(10)
        x = rng.normal(size=(80, 6)) * np.array([5.0, 3.0, 2.0, 1.0, 0.5, 0.1])
        proj = fit_projection(x, variance_target=1.0)
        ev = proj.explained_variance
        assert all(b <= a + 1e-12 for a, b in zip(ev, ev[1:]))

    def test_collinear_data_keeps_one_component(self):
        t = np.linspace(-1, 1, 30)
        x = np.column_stack([t, 2.0 * t])
        proj = fit_projection(x, variance_target=1.0)
        assert len(proj.components) == 1

    def test_full_rank_reconstruction(self):
        rng = np.random.default_rng(11)
        x = rng.normal(size=(40, 4))
        proj = fit_projection(x, variance_target=1.0)
        assert len(proj.components) == 4
        z = apply_projection(proj, x)
        back = z @ proj.components + proj.mean
        np.testing.assert_allclose(back, x, atol=1e-9)

    def test_variance_target_truncates(self):
        rng = np.random.default_rng(12)
        x = rng.normal(size=(200, 6)) * np.array([10.0, 5.0, 0.1, 0.1, 0.1, 0.1])
        proj = fit_projection(x, variance_target=0.95)
        assert len(proj.components) < 6

    def test_sign_convention_is_deterministic(self):
        rng = np.random.default_rng(13)
        x = rng.normal(size=(50, 4))
        proj = fit_projection(x, variance_target=1.0)
        for row in proj.components:
            assert row[int(np.argmax(np.abs(row)))] > 0

    def test_zero_variance_input_warns(self):
        x = np.ones((10, 3))
        with pytest.warns(UserWarning, match="zero variance"):
            proj = fit_projection(x, variance_target=0.95)
        assert len(proj.components) == 1
        np.testing.assert_array_equal(apply_projection(proj, x), np.zeros((10, 1)))

    @pytest.mark.parametrize("target", [0.0, -0.5, 1.5])
    def test_variance_target_range_checked(self, target):
        with pytest.raises(ConfigError, match="variance_target"):
            fit_projection(np.ones((5, 2)), variance_target=target)


class TestGridSearch:
    def _split_1d(self):
        # 1-D layout with one mislabeled training point at x=2: k=1
        # memorizes the noise, k=3 smooths it out on validation.
        x_train = np.arange(10, dtype=np.float64).reshape(-1, 1)
        y_train = np.array([0, 0, 1, 0, 0, 1, 1, 1, 1, 1])
        x_val = np.array([[1.6], [2.4], [6.5], [8.5]])
        y_val = np.array([0, 0, 1, 1])
        return (x_train, y_train), [(x_val, y_val)]

    def test_single_point_grid_returns_it(self):
        train, vals = self._split_1d()
        spec = grid_search("KNN", {"k": [3]}, train, vals)
        assert spec == ModelSpec(family="KNN", hyperparameters={"k": 3}, seed=0)

    def test_better_hyperparameter_wins(self):
        train, vals = self._split_1d()
        spec = grid_search("KNN", {"k": [1, 3]}, train, vals)
        assert spec.hyperparameters["k"] == 3

    def test_tie_keeps_earlier_enumeration_point(self, blob_data):
        x, y = blob_data
        train = (x[:60], y[:60])
        vals = [(x[60:], y[60:])]
        spec = grid_search("DT", {"max_depth": [None, 12]}, train, vals)
        assert spec.hyperparameters["max_depth"] is None

    def test_failing_grid_point_warns_and_search_continues(self, blob_data):
        x, y = blob_data
        train = (x[:60], y[:60])
        vals = [(x[60:], y[60:])]
        with pytest.warns(UserWarning, match="failed to fit"):
            spec = grid_search("KMEANS", {"n_clusters": [500, 2]}, train, vals)
        assert spec.hyperparameters["n_clusters"] == 2

    def test_score_is_mean_over_sets_not_pooled(self):
        train, _ = self._split_1d()
        # k=1 aces the big set (4 rows), k=3 aces the two small ones.
        # Pooled accuracy would pick k=1 (4/6 vs 2/6); the per-set mean
        # picks k=3 (2/3 vs 1/3).
        vals = [
            (np.array([[2.1]] * 4), np.array([1, 1, 1, 1])),
            (np.array([[1.6]]), np.array([0])),
            (np.array([[2.4]]), np.array([0])),
        ]
        spec = grid_search("KNN", {"k": [1, 3]}, train, vals, target_metric="acc")
        assert spec.hyperparameters["k"] == 3

    def test_seed_passed_through(self, blob_data):
        x, y = blob_data
        spec = grid_search("RF", {"n_trees": [5]}, (x, y), [(x, y)], seed=77)
        assert spec.seed == 77

    def test_empty_grid_rejected(self, blob_data):
        x, y = blob_data
        with pytest.raises(ConfigError, match="grid"):
            grid_search("KNN", {}, (x, y), [(x, y)])

    def test_no_validation_sets_rejected(self, blob_data):
        x, y = blob_data
        with pytest.raises(ConfigError, match="validation"):
            grid_search("KNN", {"k": [1]}, (x, y), [])


class TestFitPipeline:
    def test_end_to_end_learns_the_corpus(self, url_corpus):
        urls, labels = url_corpus
        spec = ModelSpec(family="LR", hyperparameters={"n_iters": 150}, seed=0)
        artifact = fit_pipeline(urls, labels, spec, top_k=40)
        pred_labels, scores = artifact.predict(urls)
        assert float(np.mean(pred_labels == labels)) >= 0.95
        assert np.array_equal(pred_labels, (scores >= 0.5).astype(np.int64))

    def test_featurize_width_follows_top_k(self, url_corpus):
        urls, labels = url_corpus
        spec = ModelSpec(family="GNB", hyperparameters={}, seed=0)
        assert fit_pipeline(urls, labels, spec, top_k=25).featurize(urls[:3]).shape == (3, 25)
        assert fit_pipeline(urls, labels, spec).featurize(urls[:3]).shape == (3, 80)

    def test_projection_stage_changes_width(self, url_corpus):
        urls, labels = url_corpus
        spec = ModelSpec(family="GNB", hyperparameters={}, seed=0)
        artifact = fit_pipeline(
            urls, labels, spec, top_k=30, use_projection=True, variance_target=0.9
        )
        width = artifact.featurize(urls[:2]).shape[1]
        assert width == len(artifact.projection.components)
        assert width < 30

    def test_featurize_equals_manual_stage_chain(self, url_corpus):
        urls, labels = url_corpus
        spec = ModelSpec(family="GNB", hyperparameters={}, seed=0)
        artifact = fit_pipeline(urls, labels, spec, top_k=20)
        probe = urls[:5]
        manual = np.hstack([extract_matrix(probe), artifact.lm_pair.transform(probe)])
        manual = apply_scaler(artifact.scaler, manual)
        manual = apply_selector(artifact.selector, manual)
        np.testing.assert_array_equal(artifact.featurize(probe), manual)

    def test_lm_columns_sit_after_lexical_block(self, url_corpus):
        urls, labels = url_corpus
        spec = ModelSpec(family="GNB", hyperparameters={}, seed=0)
        artifact = fit_pipeline(urls, labels, spec)
        assert isinstance(artifact.lm_pair, LmScorePair)
        assert len(artifact.scaler.mean) == 80  # 78 lexical + 2 LM scores

    def test_preprocessing_fitted_on_training_rows_only(self, url_corpus):
        urls, labels = url_corpus
        spec = ModelSpec(family="GNB", hyperparameters={}, seed=0)
        artifact = fit_pipeline(urls, labels, spec)
        lm = LmScorePair(order=3, k=1.0).fit(urls, labels)
        train_matrix = np.hstack([extract_matrix(urls), lm.transform(urls)])
        np.testing.assert_allclose(artifact.scaler.mean, train_matrix.mean(axis=0))
        # Growing the fit set must move the scaler: no frozen global stats.
        grown = fit_pipeline(
            urls + ["http://extra-row.example/" + "x" * 120], np.append(labels, 1), spec
        )
        assert not np.array_equal(artifact.scaler.mean, grown.scaler.mean)


class TestPipelinePersistence:
    def _artifact(self, url_corpus, **kwargs):
        urls, labels = url_corpus
        spec = ModelSpec(family="LR", hyperparameters={"n_iters": 60}, seed=0)
        return fit_pipeline(urls, labels, spec, **kwargs), urls

    def test_round_trip_identical_predictions(self, url_corpus, tmp_path):
        artifact, urls = self._artifact(url_corpus, top_k=30)
        path = tmp_path / "pipe.json"
        save_pipeline(artifact, path)
        restored = load_pipeline(path)
        a_labels, a_scores = artifact.predict(urls)
        b_labels, b_scores = restored.predict(urls)
        assert np.array_equal(a_labels, b_labels)
        assert np.array_equal(a_scores, b_scores)

    def test_round_trip_with_projection(self, url_corpus, tmp_path):
        artifact, urls = self._artifact(url_corpus, top_k=30, use_projection=True)
        path = tmp_path / "pipe.json"
        save_pipeline(artifact, path)
        restored = load_pipeline(path)
        assert np.array_equal(restored.predict(urls)[1], artifact.predict(urls)[1])

    def test_payload_fields(self, url_corpus):
        artifact, _ = self._artifact(url_corpus)
        payload = pipeline_to_dict(artifact)
        assert payload["artifact"] == "urlsleuth-pipeline"
        assert payload["format_version"] == 1
        assert payload["projection"] is None
        restored = pipeline_from_dict(payload)
        assert isinstance(restored, PipelineArtifact)

    def test_wrong_tag_rejected(self, url_corpus):
        artifact, _ = self._artifact(url_corpus)
        payload = pipeline_to_dict(artifact)
        payload["artifact"] = "urlsleuth-model"
        with pytest.raises(ArtifactError):
            pipeline_from_dict(payload)

    def test_corrupt_file_rejected(self, tmp_path):
        path = tmp_path / "pipe.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ArtifactError):
            load_pipeline(path)
