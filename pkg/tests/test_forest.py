"""Random forest: determinism, separability, reference cross-check, model files."""

from __future__ import annotations

import numpy as np
import pytest

from morphdet.forest import (
    ForestError,
    ForestModel,
    ForestParams,
    _Tree,
    load_model,
    predict_score,
    predict_scores,
    save_model,
    train_forest,
)


def two_blobs(seed=0, n=200, distance=6.0):
    rng = np.random.default_rng(seed)
    a = rng.normal(loc=(0.0, 0.0), scale=1.0, size=(n, 2))
    b = rng.normal(loc=(distance, 0.0), scale=1.0, size=(n, 2))
    X = np.vstack([a, b])
    y = np.array([0] * n + [1] * n)
    return X, y


class TestTraining:
    def test_two_separable_points_train_clean(self):
        X = np.array([[0.0], [10.0]])
        y = ["bonafide", "morph"]
        model = train_forest(X, y, ForestParams(n_trees=10, seed=3))
        s0 = predict_score(model, [0.0]).value
        s1 = predict_score(model, [10.0]).value
        assert (s0 < 0.5) and (s1 >= 0.5)
        # training accuracy 1.0 under the score >= 0.5 decision rule
        preds = [int(v >= 0.5) for v in (s0, s1)]
        assert preds == [0, 1]

    def test_determinism_identical_bytes(self):
        X, y = two_blobs(seed=1, n=40)
        params = ForestParams(n_trees=12, seed=7)
        a = train_forest(X, y, params).to_json()
        b = train_forest(X, y, params).to_json()
        assert a == b
        c = train_forest(X, y, ForestParams(n_trees=12, seed=8)).to_json()
        assert a != c

    def test_reordering_with_ids_leaves_model_invariant(self):
        X, y = two_blobs(seed=2, n=30)
        ids = [f"s{i:03d}" for i in range(len(y))]
        params = ForestParams(n_trees=8, seed=5)
        base = train_forest(X, y, params, ids=ids).to_json()
        rng = np.random.default_rng(0)
        perm = rng.permutation(len(y))
        shuffled = train_forest(X[perm], y[perm], params, ids=[ids[i] for i in perm]).to_json()
        assert base == shuffled

    def test_blobs_accuracy_against_reference(self):
        X, y = two_blobs(seed=3)
        rng = np.random.default_rng(9)
        perm = rng.permutation(len(y))
        split = int(0.7 * len(y))
        train_idx, test_idx = perm[:split], perm[split:]
        model = train_forest(X[train_idx], y[train_idx], ForestParams(n_trees=50, seed=1))
        scores = predict_scores(model, X[test_idx])
        acc = np.mean([int(s.value >= 0.5) == y[i] for s, i in zip(scores, test_idx)])
        assert acc >= 0.95
        # reference implementation on the same fixture
        from sklearn.ensemble import RandomForestClassifier

        ref = RandomForestClassifier(n_estimators=50, random_state=1).fit(X[train_idx], y[train_idx])
        assert ref.score(X[test_idx], y[test_idx]) >= 0.95

    def test_single_class_rejected(self):
        X = np.array([[0.0], [1.0]])
        with pytest.raises(ForestError, match="single class"):
            train_forest(X, [0, 0])

    def test_inconsistent_dims_rejected(self):
        from morphdet.features import FeatureVector

        vecs = [
            FeatureVector(values=np.zeros(3), method="RGB"),
            FeatureVector(values=np.zeros(4), method="RGB"),
        ]
        with pytest.raises(ForestError, match="dims"):
            train_forest(vecs, [0, 1])

    def test_label_vocabulary(self):
        X = np.array([[0.0], [1.0]])
        with pytest.raises(ForestError):
            train_forest(X, ["genuine", "fake"])
        with pytest.raises(ForestError):
            train_forest(X, [0, 2])

    def test_param_validation(self):
        with pytest.raises(ForestError):
            ForestParams(n_trees=0)
        with pytest.raises(ForestError):
            ForestParams(min_samples_leaf=0)
        with pytest.raises(ForestError):
            ForestParams(features_per_split="half")

    def test_balanced_weights_shift_leaf_probabilities(self):
        rng = np.random.default_rng(5)
        X = np.vstack([rng.normal(0, 1, (90, 1)), rng.normal(0.5, 1, (10, 1))])
        y = [0] * 90 + [1] * 10
        plain = train_forest(X, y, ForestParams(n_trees=10, seed=2, max_depth=1))
        balanced = train_forest(X, y, ForestParams(n_trees=10, seed=2, max_depth=1, balanced=True))
        grid = np.linspace(-2, 3, 11)[:, None]
        mean_plain = np.mean([s.value for s in predict_scores(plain, grid)])
        mean_balanced = np.mean([s.value for s in predict_scores(balanced, grid)])
        assert mean_balanced > mean_plain


class TestPrediction:
    def test_unanimous_trees_give_one(self):
        trees = [_Tree(feature=[-1], threshold=[0.0], left=[-1], right=[-1], prob=[1.0])] * 3
        model = ForestModel(trees=trees, params=ForestParams(n_trees=3), feature_dim=2,
                            method="RGB", training_digest="x")
        assert predict_score(model, [0.0, 0.0]).value == 1.0

    def test_mean_of_two_leaf_probs(self):
        trees = [
            _Tree(feature=[-1], threshold=[0.0], left=[-1], right=[-1], prob=[0.2]),
            _Tree(feature=[-1], threshold=[0.0], left=[-1], right=[-1], prob=[0.6]),
        ]
        model = ForestModel(trees=trees, params=ForestParams(n_trees=2), feature_dim=1,
                            method="RGB", training_digest="x")
        assert predict_score(model, [0.0]).value == pytest.approx(0.4)

    def test_scores_lie_in_unit_interval(self):
        X, y = two_blobs(seed=6, n=50)
        model = train_forest(X, y, ForestParams(n_trees=15, seed=3))
        rng = np.random.default_rng(1)
        for s in predict_scores(model, rng.normal(3, 4, size=(50, 2))):
            assert 0.0 <= s.value <= 1.0

    def test_score_equals_mean_over_trees(self):
        X, y = two_blobs(seed=7, n=30)
        model = train_forest(X, y, ForestParams(n_trees=9, seed=4))
        x = np.array([1.5, -0.5])
        per_tree = [t.predict_one(x) for t in model.trees]
        assert predict_score(model, x).value == pytest.approx(np.mean(per_tree), abs=1e-15)

    def test_decision_boundary_between_classes(self):
        rng = np.random.default_rng(8)
        left = rng.uniform(0.0, 1.0, size=(20, 1))
        right = rng.uniform(5.0, 6.0, size=(20, 1))
        X = np.vstack([left, right])
        y = [0] * 20 + [1] * 20
        model = train_forest(X, y, ForestParams(n_trees=30, seed=6))
        grid = np.linspace(-1, 7, 161)
        scores = np.array([predict_score(model, [g]).value for g in grid])
        crossing = grid[np.argmax(scores >= 0.5)]
        assert left.max() < crossing <= right.min()

    def test_dim_mismatch(self):
        X, y = two_blobs(seed=9, n=10)
        model = train_forest(X, y, ForestParams(n_trees=3, seed=0))
        with pytest.raises(ForestError, match="dim"):
            predict_score(model, [0.0, 1.0, 2.0])


class TestModelFiles:
    def test_roundtrip_predictions_identical(self, tmp_path):
        X, y = two_blobs(seed=10, n=60)
        model = train_forest(X, y, ForestParams(n_trees=20, seed=11), method="SVD")
        path = tmp_path / "model.json"
        save_model(model, path)
        loaded = load_model(path)
        assert loaded.method == "SVD"
        assert loaded.training_digest == model.training_digest
        rng = np.random.default_rng(2)
        probe = rng.normal(3, 3, size=(100, 2))
        for row in probe:
            assert predict_score(loaded, row).value == predict_score(model, row).value
        assert loaded.to_json() == model.to_json()

    def test_truncated_file_is_a_clean_error(self, tmp_path):
        X, y = two_blobs(seed=11, n=10)
        model = train_forest(X, y, ForestParams(n_trees=2, seed=0))
        path = tmp_path / "model.json"
        save_model(model, path)
        path.write_text(path.read_text()[: len(path.read_text()) // 2])
        with pytest.raises(ForestError, match="model file"):
            load_model(path)

    def test_version_gate(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text('{"format_version": 99}')
        with pytest.raises(ForestError, match="version"):
            load_model(path)

    def test_dim_guard_after_load(self, tmp_path):
        rng = np.random.default_rng(3)
        X = rng.random((20, 59))
        y = [0, 1] * 10
        model = train_forest(X, y, ForestParams(n_trees=4, seed=1))
        path = tmp_path / "model.json"
        save_model(model, path)
        loaded = load_model(path)
        with pytest.raises(ForestError, match="dim"):
            predict_score(loaded, np.zeros(472))
