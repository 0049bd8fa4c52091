import itertools
import math

import numpy as np
import pytest

from gedkit.detectors import (
    abod_score,
    classifier_fit,
    f05_metric,
    fit_outlier_detector,
    gmm_fit,
    gmm_log_density,
    grid_search_threshold,
    iforest_fit,
    iforest_score,
    kde_fit,
    kde_log_density,
    kde_score,
    load_outlier_detector,
    loss_and_grad,
    permutation_importance,
    save_outlier_detector,
    surprisal_gap,
    threshold_by_contamination,
)
from gedkit.detectors.classifier import _derived_seed
from gedkit.errors import DataError
from gedkit.evaluate import confusion, f_beta

BASELINE = 5 / 9


def rows_from(values, key="min_p"):
    return [{key: float(v)} for v in values]


class TestGridSearch:
    def test_perfectly_separable(self):
        values = [0.1, 0.2, 0.3, 0.7, 0.8, 0.9]
        labels = [1, 1, 1, 0, 0, 0]
        detector, curve = grid_search_threshold(
            rows_from(values), labels, "min_p", "flag_below", grid=50
        )
        best = max(f for _, f in curve)
        assert best == 1.0
        assert detector.predict(rows_from(values)) == labels

    def test_matches_exhaustive_enumeration(self):
        values = [0.05, 0.3, 0.32, 0.6, 0.61, 0.9]
        labels = [1, 0, 1, 0, 1, 0]
        detector, curve = grid_search_threshold(
            rows_from(values), labels, "min_p", "flag_below", grid=200
        )
        # brute force over every data value as candidate threshold
        best = 0.0
        for t in values:
            preds = [1 if v <= t else 0 for v in values]
            c = confusion(preds, labels)
            best = max(best, f_beta(c.precision, c.recall))
        assert abs(max(f for _, f in curve) - best) < 1e-12

    def test_argmax_property(self):
        rng = np.random.default_rng(0)
        values = rng.uniform(size=40)
        labels = (values + rng.normal(0, 0.3, size=40) < 0.5).astype(int).tolist()
        detector, curve = grid_search_threshold(
            rows_from(values), labels, "min_p", "flag_below", grid=60
        )
        preds = detector.predict(rows_from(values))
        c = confusion(preds, labels)
        assert all(f_beta(c.precision, c.recall) >= f - 1e-12 for _, f in curve)

    def test_independent_labels_near_baseline(self):
        rng = np.random.default_rng(1)
        values = rng.uniform(size=2000)
        labels = ([0, 1] * 1000)[:2000]
        _, curve = grid_search_threshold(
            rows_from(values), labels, "min_p", "flag_below", grid=100
        )
        assert abs(max(f for _, f in curve) - BASELINE) < 0.05

    def test_ties_take_smallest_threshold(self):
        values = [0.1, 0.2, 0.8, 0.9]
        labels = [1, 1, 0, 0]
        detector, curve = grid_search_threshold(
            rows_from(values), labels, "min_p", "flag_below", grid=100
        )
        winners = [t for t, f in curve if f == 1.0]
        assert detector.threshold == min(winners)

    def test_single_class_errors(self):
        with pytest.raises(DataError):
            grid_search_threshold(rows_from([1, 2, 3]), [1, 1, 1], "min_p", "flag_below")

    def test_unknown_feature_rejected(self):
        with pytest.raises(DataError):
            grid_search_threshold(rows_from([1, 2]), [0, 1], "nope", "flag_below")


class TestKde:
    def test_density_ordering(self):
        rng = np.random.default_rng(2)
        x = rng.normal(0, 1, size=(200, 3))
        model = kde_fit(x)
        inside = kde_score(model, x[0])
        outside = kde_score(model, np.full(3, 10.0))
        assert outside > inside

    def test_two_point_closed_form(self):
        x = np.array([[0.0], [1.0]])
        model = kde_fit(x)
        sigma = np.std(x, axis=0, ddof=1)[0]
        h = 2 ** (-1 / 5) * sigma
        for v in (0.0, 0.3, 1.7):
            expected = 0.5 * (
                math.exp(-0.5 * (v / h) ** 2) + math.exp(-0.5 * ((v - 1) / h) ** 2)
            ) / (h * math.sqrt(2 * math.pi))
            assert abs(kde_log_density(model, [v]) - math.log(expected)) < 1e-12

    def test_deterministic(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(50, 2))
        s1 = [kde_score(kde_fit(x), row) for row in x[:5]]
        s2 = [kde_score(kde_fit(x), row) for row in x[:5]]
        assert s1 == s2

    def test_zero_variance_dimension_jitter(self, caplog):
        x = np.column_stack([np.arange(10.0), np.ones(10)])
        model = kde_fit(x)
        assert np.isfinite(kde_score(model, [5.0, 1.0]))

    def test_needs_two_vectors(self):
        with pytest.raises(DataError):
            kde_fit([[1.0]])


class TestIsolationForest:
    def test_planted_point_scores_highest(self):
        rng = np.random.default_rng(4)
        ball = rng.normal(0, 1, size=(500, 2))
        planted = np.array([[10.0, 10.0]])
        pool = np.vstack([ball, planted])
        model = iforest_fit(pool, n_trees=100, subsample=256, seed=0)
        scores = [iforest_score(model, row) for row in pool]
        assert int(np.argmax(scores)) == 500

    def test_scores_in_unit_interval(self):
        rng = np.random.default_rng(5)
        pool = rng.normal(size=(80, 3))
        model = iforest_fit(pool, seed=1)
        for row in pool:
            assert 0.0 < iforest_score(model, row) < 1.0

    def test_duplicate_data_equal_scores(self):
        pool = np.tile([[1.0, 2.0]], (50, 1))
        model = iforest_fit(pool, seed=2)
        scores = {iforest_score(model, row) for row in pool}
        assert len(scores) == 1

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(6)
        pool = rng.normal(size=(100, 2))
        a = iforest_fit(pool, seed=7)
        b = iforest_fit(pool, seed=7)
        assert [iforest_score(a, r) for r in pool] == [iforest_score(b, r) for r in pool]

    def test_duplication_does_not_raise_score(self):
        rng = np.random.default_rng(8)
        ball = rng.normal(0, 1, size=(300, 2))
        point = np.array([6.0, 6.0])
        base_pool = np.vstack([ball, point[None, :]])
        dup_pool = np.vstack([ball, np.tile(point, (10, 1))])
        score_base = iforest_score(iforest_fit(base_pool, n_trees=200, seed=3), point)
        score_dup = iforest_score(iforest_fit(dup_pool, n_trees=200, seed=3), point)
        assert score_dup <= score_base + 0.01


class TestAbod:
    def test_ring_geometry(self):
        angles = np.linspace(0, 2 * math.pi, 24, endpoint=False)
        ring = np.column_stack([np.cos(angles), np.sin(angles)])
        center_score = abod_score(ring, [0.0, 0.0])
        outside_score = abod_score(ring, [8.0, 0.0])
        # center sees wide angles (high variance -> low anomaly score)
        assert outside_score > center_score

    def test_matches_pairwise_oracle(self):
        refs = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.5], [0.3, -0.8]])
        v = np.array([0.2, 0.1])
        values = []
        for i, j in itertools.combinations(range(len(refs)), 2):
            di = refs[i] - v
            dj = refs[j] - v
            values.append(
                float(np.dot(di, dj)) / (np.dot(di, di) * np.dot(dj, dj))
            )
        expected = -float(np.var(values))
        assert abs(abod_score(refs, v) - expected) < 1e-12

    def test_coincident_references_skipped(self):
        refs = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        # v equals the first reference; the score must still be finite
        assert np.isfinite(abod_score(refs, [0.0, 0.0]))

    def test_all_coincident_errors(self):
        refs = np.zeros((4, 2))
        with pytest.raises(DataError):
            abod_score(refs, [0.0, 0.0])


class TestContaminationThreshold:
    def test_exactly_one_flagged(self):
        scores = [float(v) for v in range(10)]
        thr = threshold_by_contamination(scores, 0.1)
        assert sum(1 for s in scores if s > thr) == 1

    def test_equal_scores_nothing_flagged(self):
        scores = [0.5] * 12
        thr = threshold_by_contamination(scores, 0.25)
        assert sum(1 for s in scores if s > thr) == 0

    def test_flagged_fraction_close(self):
        rng = np.random.default_rng(9)
        scores = rng.uniform(size=400).tolist()
        for c in (0.05, 0.2, 0.5):
            thr = threshold_by_contamination(scores, c)
            frac = sum(1 for s in scores if s > thr) / len(scores)
            assert abs(frac - c) <= 1 / len(scores) + 1e-9

    def test_range_validation(self):
        with pytest.raises(DataError):
            threshold_by_contamination([1.0, 2.0], 0.0)
        with pytest.raises(DataError):
            threshold_by_contamination([1.0, 2.0], 0.6)


class TestOutlierDetectorWrapper:
    def test_round_trip_all_algorithms(self, tmp_path):
        rng = np.random.default_rng(10)
        pool = rng.normal(size=(60, 3))
        probe = pool[7]
        for algorithm in ("kde", "iforest", "abod"):
            det = fit_outlier_detector(pool, algorithm, contamination=0.1, seed=1)
            path = tmp_path / f"{algorithm}.json"
            save_outlier_detector(det, path)
            loaded = load_outlier_detector(path)
            assert loaded.score_threshold == det.score_threshold
            assert abs(loaded.score(probe) - det.score(probe)) < 1e-12


class TestModelSerialization:
    def test_gmm_round_trip(self, tmp_path):
        from gedkit.detectors import load_gmm, save_gmm

        rng = np.random.default_rng(30)
        x = rng.normal(size=(80, 3))
        model = gmm_fit(x, k=2, seed=0)
        path = tmp_path / "gmm.json"
        save_gmm(model, path)
        loaded = load_gmm(path)
        probe = rng.normal(size=(5, 3))
        assert np.allclose(gmm_log_density(loaded, probe), gmm_log_density(model, probe))

    def test_classifier_round_trip(self, tmp_path):
        from gedkit.detectors import load_classifier, save_classifier

        rows, labels = make_feature_rows(60, seed=31)
        model = classifier_fit(rows, labels, epochs=300)
        path = tmp_path / "clf.json"
        save_classifier(model, path)
        loaded = load_classifier(path)
        assert loaded.predict(rows) == model.predict(rows)
        assert np.allclose(loaded.predict_proba(rows), model.predict_proba(rows))


class TestGmm:
    def test_k1_closed_form(self):
        rng = np.random.default_rng(11)
        x = rng.normal(2.0, 3.0, size=(400, 2))
        model = gmm_fit(x, k=1, seed=0)
        assert np.allclose(model.means[0], x.mean(axis=0), atol=1e-9)
        assert np.allclose(model.variances[0], x.var(axis=0), atol=1e-9)
        assert abs(model.weights[0] - 1.0) < 1e-12

    def test_two_blobs(self):
        rng = np.random.default_rng(12)
        sigma = 0.3
        a = rng.normal(0.0, sigma, size=(300, 2))
        b = rng.normal(8.0, sigma, size=(300, 2))
        model = gmm_fit(np.vstack([a, b]), k=2, seed=1)
        centers = sorted(float(m[0]) for m in model.means)
        assert abs(centers[0] - 0.0) < 0.1 * sigma
        assert abs(centers[1] - 8.0) < 0.1 * sigma

    def test_loglikelihood_monotone(self):
        rng = np.random.default_rng(13)
        x = np.vstack(
            [rng.normal(0, 1, size=(150, 3)), rng.normal(5, 2, size=(150, 3))]
        )
        model = gmm_fit(x, k=3, seed=2)
        trace = model.log_likelihoods
        assert all(b >= a - 1e-9 for a, b in zip(trace, trace[1:]))

    def test_density_integrates_to_one_1d(self):
        rng = np.random.default_rng(14)
        x = np.concatenate([rng.normal(-2, 0.5, 200), rng.normal(3, 1.5, 200)])[:, None]
        model = gmm_fit(x, k=2, seed=3)
        lo = float(model.means.min() - 6 * np.sqrt(model.variances.max()))
        hi = float(model.means.max() + 6 * np.sqrt(model.variances.max()))
        grid = np.linspace(lo, hi, 20001)
        dens = np.exp(gmm_log_density(model, grid[:, None]))
        integral = float(np.trapezoid(dens, grid))
        assert abs(integral - 1.0) < 1e-3

    def test_n_less_than_k_errors(self):
        with pytest.raises(DataError):
            gmm_fit(np.zeros((2, 2)), k=3)


class TestSurprisalGap:
    def test_identical_sets(self):
        rng = np.random.default_rng(15)
        x = rng.normal(size=(100, 2))
        model = gmm_fit(x, k=2, seed=0)
        probe = rng.normal(size=(20, 2))
        assert surprisal_gap(model, probe, probe) == 0.0

    def test_shifted_corrupted_positive(self):
        rng = np.random.default_rng(16)
        x = rng.normal(size=(200, 2))
        model = gmm_fit(x, k=2, seed=0)
        fixed = rng.normal(size=(50, 2))
        corrupted = fixed + 12.0
        assert surprisal_gap(model, corrupted, fixed) > 0.0

    def test_1d_k1_closed_form(self):
        x = np.array([[0.0], [2.0], [4.0]])
        model = gmm_fit(x, k=1, seed=0)
        mu, var = 2.0, 8.0 / 3.0
        def nll(v):
            return 0.5 * (math.log(2 * math.pi * var) + (v - mu) ** 2 / var)
        expected = nll(5.0) - nll(2.0)
        assert abs(surprisal_gap(model, [[5.0]], [[2.0]]) - expected) < 1e-9


def make_feature_rows(n, seed, signal=True):
    rng = np.random.default_rng(seed)
    labels = ([1, 0] * n)[:n]
    rows = []
    for y in labels:
        a = rng.normal(2.0 * y, 1.0) if signal else rng.normal(0, 1)
        b = rng.normal(0, 1)
        rows.append({"feat_a": float(a), "feat_b": float(b)})
    return rows, labels


class TestClassifier:
    def test_separable_toy_perfect_training_accuracy(self):
        rows = [{"x": 0.0, "y": 0.0}, {"x": 0.1, "y": 1.0},
                {"x": 5.0, "y": 0.2}, {"x": 5.2, "y": 0.9}]
        labels = [0, 0, 1, 1]
        model = classifier_fit(rows, labels, l2=1e-4, epochs=3000, lr=0.5)
        assert model.predict(rows) == labels

    def test_gradient_vanishes_at_optimum(self):
        rows, labels = make_feature_rows(80, seed=17)
        model = classifier_fit(rows, labels, l2=0.01, epochs=20000, lr=1.0)
        _, grad_w, grad_b = loss_and_grad(model, rows, labels)
        assert float(np.max(np.abs(grad_w))) < 1e-6 and abs(grad_b) < 1e-6

    def test_gradient_matches_finite_differences(self):
        rows, labels = make_feature_rows(60, seed=18)
        model = classifier_fit(rows, labels, l2=0.01, epochs=500, lr=0.3)
        loss0, grad_w, _ = loss_and_grad(model, rows, labels)
        eps = 1e-6
        for j in range(len(model.weights)):
            w_plus = model.weights.copy()
            w_plus[j] += eps
            bumped = type(model)(
                model.feature_names, model.mean, model.std, w_plus, model.bias, model.l2
            )
            loss_plus, _, _ = loss_and_grad(bumped, rows, labels)
            fd = (loss_plus - loss0) / eps
            assert abs(fd - grad_w[j]) < 1e-4

    def test_no_signal_stays_near_baseline(self):
        # slightly positive-heavy training set: a no-signal model degenerates
        # to the all-positive predictor, the random-guess ceiling
        rng = np.random.default_rng(19)
        train_rows = [{"a": float(rng.normal()), "b": float(rng.normal())} for _ in range(220)]
        train_labels = [1] * 120 + [0] * 100
        held_rows = [{"a": float(rng.normal()), "b": float(rng.normal())} for _ in range(200)]
        held_labels = [1, 0] * 100
        model = classifier_fit(train_rows, train_labels, l2=0.05, epochs=3000, lr=0.5)
        score = f05_metric(model.predict(held_rows), held_labels)
        assert abs(score - BASELINE) < 0.05

    def test_single_class_errors(self):
        rows, _ = make_feature_rows(10, seed=20)
        with pytest.raises(DataError):
            classifier_fit(rows, [1] * 10)

    def test_constant_features_dropped(self):
        rows = [{"const": 1.0, "var": float(i % 2)} for i in range(20)]
        labels = [i % 2 for i in range(20)]
        model = classifier_fit(rows, labels, epochs=500)
        assert model.feature_names == ("var",)


class TestPermutationImportance:
    def test_sole_predictive_feature_positive(self):
        rows, labels = make_feature_rows(300, seed=21, signal=True)
        model = classifier_fit(rows, labels, epochs=2000, lr=0.5)
        imp = permutation_importance(model, rows, labels, repeats=5, seed=0)
        assert imp["feat_a"] > 0.1
        assert abs(imp["feat_b"]) < 0.05

    def test_matches_manual_shuffle(self):
        rows, labels = make_feature_rows(100, seed=22)
        model = classifier_fit(rows, labels, epochs=1000, lr=0.5)
        imp = permutation_importance(model, rows, labels, repeats=1, seed=5)
        name = "feat_a"
        rng = np.random.default_rng(_derived_seed(5, name, 0))
        perm = rng.permutation(len(rows))
        shuffled = [
            {**row, name: rows[int(j)][name]} for row, j in zip(rows, perm)
        ]
        base = f05_metric(model.predict(rows), labels)
        expected = base - f05_metric(model.predict(shuffled), labels)
        assert abs(imp[name] - expected) < 1e-12
