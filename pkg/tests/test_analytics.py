import math

import numpy as np
import pytest

from lector.analytics import (
    CVResult,
    GradeLabel,
    auc,
    best_topic,
    compare_representations,
    cross_validate,
    explain_prediction,
    f1_score,
    fdr,
    logreg_loss_grad,
    predict_proba,
    train_logreg,
    ttest,
)
from lector.logs import PreferenceVector


def pref(user, values):
    return PreferenceVector(user_id=user, basis="TOPICS", values=np.asarray(values, float))


def brute_force_fdr(a, b):
    """Oracle: explicit loops for means and population variances."""
    ma = sum(a) / len(a)
    mb = sum(b) / len(b)
    va = sum((x - ma) ** 2 for x in a) / len(a)
    vb = sum((x - mb) ** 2 for x in b) / len(b)
    return (ma - mb) ** 2 / (va + vb)


class TestFdr:
    def test_identical_samples_zero(self):
        a = [1.0, 2.0, 3.0]
        assert fdr(a, a) == 0.0

    def test_hand_value(self):
        # means 0 and 1, variances 0.5 each -> 1 / (0.5 + 0.5) = 1
        a = [-math.sqrt(0.5), math.sqrt(0.5)]
        b = [1 - math.sqrt(0.5), 1 + math.sqrt(0.5)]
        np.testing.assert_allclose(fdr(a, b), 1.0, atol=1e-12)

    def test_matches_brute_force_on_random_pairs(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            a = rng.normal(rng.uniform(-2, 2), rng.uniform(0.5, 2), size=rng.integers(2, 20))
            b = rng.normal(rng.uniform(-2, 2), rng.uniform(0.5, 2), size=rng.integers(2, 20))
            np.testing.assert_allclose(fdr(a, b), brute_force_fdr(list(a), list(b)),
                                       rtol=1e-12)

    def test_symmetry(self):
        rng = np.random.default_rng(1)
        a = rng.normal(size=10)
        b = rng.normal(1.0, 2.0, size=7)
        assert fdr(a, b) == fdr(b, a)

    def test_scale_covariance(self):
        rng = np.random.default_rng(2)
        a = rng.normal(size=8)
        b = rng.normal(2.0, size=9)
        np.testing.assert_allclose(fdr(3.0 * a, 3.0 * b), fdr(a, b), rtol=1e-12)

    def test_degenerate_populations_error(self):
        with pytest.raises(ValueError, match="degenerate"):
            fdr([1.0, 1.0], [2.0, 2.0])

    def test_too_small_sample(self):
        with pytest.raises(ValueError, match="2 samples"):
            fdr([1.0], [2.0, 3.0])


class TestBestTopic:
    def test_separated_coordinate_wins(self):
        ga = [pref("a1", [0.0, 5.0, 0.1]), pref("a2", [0.1, 5.1, 0.0])]
        gb = [pref("b1", [0.0, 1.0, 0.1]), pref("b2", [0.1, 1.1, 0.0])]
        words = [("x",), ("y",), ("z",)]
        idx, value = best_topic(ga, gb, words)
        assert idx == 1
        assert value > 100

    def test_identical_groups_flag_first_lexicographic(self, caplog):
        ga = [pref("a1", [1.0, 2.0]), pref("a2", [3.0, 4.0])]
        gb = [pref("b1", [1.0, 2.0]), pref("b2", [3.0, 4.0])]
        words = [("zeta",), ("alpha",)]
        idx, value = best_topic(ga, gb, words)
        assert value == 0.0
        assert words[idx] == ("alpha",)

    def test_matches_exhaustive_oracle(self):
        rng = np.random.default_rng(3)
        words = [(f"t{j}",) for j in range(6)]
        ga = [pref(f"a{i}", rng.normal(0, 1, 6)) for i in range(8)]
        gb = [pref(f"b{i}", rng.normal(0.5, 1, 6)) for i in range(9)]
        idx, value = best_topic(ga, gb, words)
        Xa = np.vstack([p.values for p in ga])
        Xb = np.vstack([p.values for p in gb])
        oracle = max(
            range(6),
            key=lambda j: brute_force_fdr(list(Xa[:, j]), list(Xb[:, j])),
        )
        assert idx == oracle
        np.testing.assert_allclose(
            value, brute_force_fdr(list(Xa[:, oracle]), list(Xb[:, oracle])), rtol=1e-12
        )

    def test_degenerate_coordinate_skipped(self, caplog):
        ga = [pref("a1", [1.0, 0.0]), pref("a2", [1.0, 0.2])]
        gb = [pref("b1", [2.0, 0.1]), pref("b2", [2.0, 0.3])]  # coord 0 degenerate
        idx, _ = best_topic(ga, gb, [("bad",), ("good",)])
        assert idx == 1


class TestLogisticRegression:
    def separable_1d(self):
        X = np.array([[-1.0]] * 10 + [[1.0]] * 10)
        y = np.array([0.0] * 10 + [1.0] * 10)
        return X, y

    def test_initial_loss_is_n_ln2(self):
        X, y = self.separable_1d()
        model = train_logreg(X, y, epochs=0)
        np.testing.assert_allclose(model.losses[0], 20 * math.log(2), atol=1e-12)

    def test_separable_data_training_auc_one(self):
        X, y = self.separable_1d()
        model = train_logreg(X, y)
        assert auc(predict_proba(model, X), y) == 1.0

    def test_gradient_matches_central_differences(self):
        rng = np.random.default_rng(4)
        X = rng.standard_normal((40, 6))
        y = (rng.random(40) > 0.5).astype(float)
        w = rng.standard_normal(6) * 0.5
        b = 0.3
        l2 = 0.01
        loss, gw, gb = logreg_loss_grad(w, b, X, y, l2)
        eps = 1e-5
        fd = np.empty(6)
        for j in range(6):
            wp, wm = w.copy(), w.copy()
            wp[j] += eps
            wm[j] -= eps
            fd[j] = (logreg_loss_grad(wp, b, X, y, l2)[0]
                     - logreg_loss_grad(wm, b, X, y, l2)[0]) / (2 * eps)
        rel = np.abs(gw - fd) / np.maximum(np.abs(fd), 1e-8)
        assert rel.max() <= 1e-4
        fd_b = (logreg_loss_grad(w, b + eps, X, y, l2)[0]
                - logreg_loss_grad(w, b - eps, X, y, l2)[0]) / (2 * eps)
        assert abs(gb - fd_b) / max(abs(fd_b), 1e-8) <= 1e-4

    def test_loss_non_increasing(self):
        rng = np.random.default_rng(5)
        X = rng.standard_normal((50, 4))
        y = (X[:, 0] + 0.5 * rng.standard_normal(50) > 0).astype(float)
        model = train_logreg(X, y, epochs=200)
        assert np.all(np.diff(model.losses) <= 1e-12)

    def test_single_class_rejected(self):
        X = np.ones((5, 2))
        with pytest.raises(ValueError, match="both classes"):
            train_logreg(X, np.ones(5))

    def test_zero_variance_features_dropped(self):
        rng = np.random.default_rng(6)
        X = np.hstack([np.full((20, 1), 7.0), rng.standard_normal((20, 2))])
        y = (X[:, 1] > 0).astype(float)
        model = train_logreg(X, y, feature_names=["const", "sig", "noise"])
        assert model.dropped == ["const"]
        assert model.feature_names == ["sig", "noise"]
        assert np.all(model.std > 0)

    def test_deterministic(self):
        rng = np.random.default_rng(7)
        X = rng.standard_normal((30, 3))
        y = (X[:, 0] > 0).astype(float)
        m1 = train_logreg(X, y, seed=11)
        m2 = train_logreg(X, y, seed=11)
        np.testing.assert_array_equal(m1.weights, m2.weights)


class TestPredictProba:
    def test_zero_model_gives_half(self):
        X, y = np.array([[-1.0], [1.0]]), np.array([0.0, 1.0])
        model = train_logreg(X, y, epochs=0)
        np.testing.assert_allclose(predict_proba(model, X), [0.5, 0.5])

    def test_large_bias_saturates(self):
        X, y = np.array([[-1.0], [1.0]]), np.array([0.0, 1.0])
        model = train_logreg(X, y, epochs=0)
        model.bias = 20.0
        assert np.all(predict_proba(model, X) > 0.999)

    def test_hand_case(self):
        X, y = np.array([[-1.0], [1.0]]), np.array([0.0, 1.0])
        model = train_logreg(X, y, epochs=0)
        model.weights = np.array([1.0])
        # standardized value of x = 0 is 0: sigmoid(0) = 0.5
        np.testing.assert_allclose(predict_proba(model, np.array([[0.0]])), [0.5])

    def test_monotone_in_linear_score(self):
        rng = np.random.default_rng(8)
        X = rng.standard_normal((30, 2))
        y = (X[:, 0] > 0).astype(float)
        model = train_logreg(X, y)
        grid = np.linspace(-3, 3, 20)[:, None] * np.ones((1, 2))
        p = predict_proba(model, grid)
        s = np.sign(model.weights.sum())
        diffs = np.diff(p) * (s if s != 0 else 1)
        assert np.all(diffs >= -1e-12) or np.all(diffs <= 1e-12)

    def test_dimension_mismatch(self):
        X, y = np.array([[-1.0], [1.0]]), np.array([0.0, 1.0])
        model = train_logreg(X, y)
        with pytest.raises(ValueError, match="columns"):
            predict_proba(model, np.ones((2, 3)))


class TestAuc:
    def test_perfect_ranking(self):
        assert auc([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]) == 1.0

    def test_all_ties_give_half(self):
        assert auc([0.4, 0.4, 0.4, 0.4], [1, 0, 1, 0]) == 0.5

    def test_hand_case(self):
        assert auc([0.9, 0.4, 0.6, 0.1], [1, 0, 1, 0]) == 1.0

    def test_matches_exhaustive_pair_count(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            n = int(rng.integers(4, 30))
            scores = rng.choice([0.1, 0.3, 0.5, 0.7, 0.9], size=n)  # forces ties
            labels = rng.integers(0, 2, n)
            if labels.min() == labels.max():
                labels[0] = 1 - labels[0]
            pos = scores[labels == 1]
            neg = scores[labels == 0]
            total = 0.0
            for sp in pos:
                for sn in neg:
                    if sp > sn:
                        total += 1.0
                    elif sp == sn:
                        total += 0.5
            oracle = total / (len(pos) * len(neg))
            np.testing.assert_allclose(auc(scores, labels), oracle, rtol=1e-12)

    def test_invariant_under_monotone_transform(self):
        rng = np.random.default_rng(10)
        scores = rng.random(30)
        labels = rng.integers(0, 2, 30)
        labels[0], labels[1] = 0, 1
        a1 = auc(scores, labels)
        a2 = auc(np.exp(5 * scores) + 3, labels)
        np.testing.assert_allclose(a1, a2, rtol=1e-12)

    def test_single_class_rejected(self):
        with pytest.raises(ValueError, match="both classes"):
            auc([0.5, 0.6], [1, 1])


def t_cdf_tail_by_quadrature(t, df, grid=200001, span=60.0):
    """Oracle: numerically integrate the t density over [t, t + span]."""
    const = math.exp(math.lgamma((df + 1) / 2) - math.lgamma(df / 2)) / math.sqrt(df * math.pi)
    xs = np.linspace(t, t + span, grid)
    pdf = const * (1 + xs**2 / df) ** (-(df + 1) / 2)
    return float(np.trapezoid(pdf, xs))


class TestTtest:
    def test_identical_samples_p_one(self):
        a = [1.0, 2.0, 3.0]
        assert ttest(a, a) == 1.0

    def test_extreme_separation(self):
        a = [1.0, 2.0, 3.0]
        b = [101.0, 102.0, 103.0]
        assert ttest(a, b) < 0.001

    def test_matches_numerical_integration_of_t_density(self):
        # textbook Welch case, checked against direct quadrature of the pdf
        a = np.array([27.5, 21.0, 19.0, 23.6, 17.0, 17.9, 16.9, 20.1, 21.9, 22.6, 23.1, 19.6, 19.0, 21.7, 21.4])
        b = np.array([27.1, 22.0, 20.8, 23.4, 23.4, 23.5, 25.8, 22.0, 24.8, 20.2, 21.9, 22.1, 22.9, 30.0, 23.9])
        va = a.var(ddof=1) / a.size
        vb = b.var(ddof=1) / b.size
        t = abs((a.mean() - b.mean()) / math.sqrt(va + vb))
        df = (va + vb) ** 2 / (va**2 / (a.size - 1) + vb**2 / (b.size - 1))
        expected = 2 * t_cdf_tail_by_quadrature(t, df)
        np.testing.assert_allclose(ttest(a, b), expected, atol=1e-3)

    def test_zero_variance_equal_means(self):
        assert ttest([5.0, 5.0], [5.0, 5.0]) == 1.0

    def test_zero_variance_distinct_means(self):
        assert ttest([5.0, 5.0], [6.0, 6.0]) == 0.0

    def test_symmetric(self):
        rng = np.random.default_rng(11)
        a = rng.normal(size=12)
        b = rng.normal(0.7, 1.3, size=9)
        np.testing.assert_allclose(ttest(a, b), ttest(b, a), rtol=1e-12)


class TestExplainPrediction:
    def model(self):
        rng = np.random.default_rng(12)
        X = rng.standard_normal((40, 5))
        y = (X[:, 0] - X[:, 2] > 0).astype(float)
        return train_logreg(X, y), X

    def test_population_mean_gives_zero_contributions(self):
        model, X = self.model()
        mean = X.mean(axis=0)
        contribs = explain_prediction(model, mean, mean)
        assert all(abs(c["contribution"]) < 1e-12 for c in contribs)

    def test_single_nonzero_weight(self):
        model, X = self.model()
        model.weights = np.zeros(5)
        model.weights[2] = 1.5
        mean = X.mean(axis=0)
        x = mean.copy()
        x[2] += 1.0
        contribs = explain_prediction(model, x, mean)
        nonzero = [c for c in contribs if abs(c["contribution"]) > 1e-12]
        assert len(nonzero) == 1
        assert nonzero[0]["feature"] == model.feature_names[2]

    def test_contributions_sum_to_logit_difference(self):
        from lector.analytics import decision_scores
        model, X = self.model()
        rng = np.random.default_rng(13)
        for _ in range(10):
            x = rng.standard_normal(5)
            mean = X.mean(axis=0)
            contribs = explain_prediction(model, x, mean)
            total = sum(c["contribution"] for c in contribs)
            logit_diff = decision_scores(model, x)[0] - decision_scores(model, mean)[0]
            assert abs(total - logit_diff) <= 1e-12


class TestCrossValidate:
    def cohort(self, n=60, seed=14):
        rng = np.random.default_rng(seed)
        X = rng.standard_normal((n, 4))
        y = (X[:, 0] + 0.3 * rng.standard_normal(n) > 0).astype(float)
        if y.min() == y.max():
            y[0] = 1 - y[0]
        return X, y

    def test_exact_fold_partition(self):
        X, y = self.cohort(60)
        cv = cross_validate(X, y, folds=3, fold_size=20, seed=0)
        assert len(cv.f1) == 3 and len(cv.auc) == 3
        assert not cv.shrunk

    def test_fold_sizes_exact_for_unbalanced_classes(self):
        from lector.analytics import _stratified_folds
        rng = np.random.default_rng(18)
        ys = np.zeros(60)
        ys[:25] = 1.0  # 25/35 split cannot deal round-robin evenly
        assignment = _stratified_folds(ys, folds=3, fold_size=20, rng=rng)
        sizes = [int((assignment == f).sum()) for f in range(3)]
        assert sizes == [20, 20, 20]
        pos_per_fold = [int(((assignment == f) & (ys == 1)).sum()) for f in range(3)]
        assert max(pos_per_fold) - min(pos_per_fold) <= 1  # stratified

    def test_unbalanced_cohort_runs(self):
        rng = np.random.default_rng(18)
        X = rng.standard_normal((100, 3))
        y = np.zeros(100)
        y[:20] = 1.0
        cv = cross_validate(X, y, folds=3, fold_size=20, seed=0)
        assert len(cv.auc) == 3

    def test_deterministic_given_seed(self):
        X, y = self.cohort(80)
        c1 = cross_validate(X, y, seed=5)
        c2 = cross_validate(X, y, seed=5)
        np.testing.assert_array_equal(c1.f1, c2.f1)
        np.testing.assert_array_equal(c1.auc, c2.auc)

    def test_small_cohort_shrinks_with_flag(self):
        X, y = self.cohort(30)
        cv = cross_validate(X, y, folds=3, fold_size=20, seed=1)
        assert cv.shrunk
        assert len(cv.f1) == 3

    def test_metrics_in_unit_interval(self):
        X, y = self.cohort(66, seed=15)
        cv = cross_validate(X, y, seed=2)
        assert np.all((cv.f1 >= 0) & (cv.f1 <= 1))
        assert np.all((cv.auc >= 0) & (cv.auc <= 1))

    def test_informative_features_beat_chance(self):
        X, y = self.cohort(90, seed=16)
        cv = cross_validate(X, y, seed=3)
        assert cv.auc_mean > 0.8

    def test_impossible_stratification_errors(self):
        rng = np.random.default_rng(17)
        X = rng.standard_normal((60, 2))
        y = np.zeros(60)
        y[0] = 1.0  # one positive cannot reach every fold
        with pytest.raises(ValueError, match="folds"):
            cross_validate(X, y, folds=3, fold_size=20, seed=4)


class TestCompareRepresentations:
    def cv_of(self, f1s, aucs):
        return CVResult(f1=np.array(f1s), auc=np.array(aucs), shrunk=False)

    def test_identical_pairs_tie(self):
        a = self.cv_of([0.5, 0.6, 0.7], [0.6, 0.7, 0.8])
        tallies = compare_representations([a, a], [a, a])
        assert tallies["auc"] == {"T>F": 0, "F>T": 0, "T=F": 2}
        assert tallies["f1"] == {"T>F": 0, "F>T": 0, "T=F": 2}

    def test_dominant_topic_side(self):
        t = self.cv_of([0.9, 0.91, 0.92], [0.95, 0.96, 0.97])
        f = self.cv_of([0.1, 0.11, 0.12], [0.2, 0.21, 0.22])
        tallies = compare_representations([t, t, t], [f, f, f])
        assert tallies["auc"]["T>F"] == 3
        assert tallies["f1"]["T>F"] == 3

    def test_mixed_battery_matches_hand_classification(self):
        # six constructed cases: clear T win, clear F win, tie (identical),
        # tie (high variance), T win on auc only, F win on f1 only
        t_win = (self.cv_of([0.9, 0.92, 0.91], [0.9, 0.92, 0.91]),
                 self.cv_of([0.2, 0.21, 0.19], [0.2, 0.21, 0.19]))
        f_win = (self.cv_of([0.2, 0.21, 0.19], [0.2, 0.21, 0.19]),
                 self.cv_of([0.9, 0.92, 0.91], [0.9, 0.92, 0.91]))
        tie_same = (self.cv_of([0.5, 0.5, 0.5], [0.5, 0.5, 0.5]),
                    self.cv_of([0.5, 0.5, 0.5], [0.5, 0.5, 0.5]))
        tie_noisy = (self.cv_of([0.1, 0.9, 0.5], [0.1, 0.9, 0.5]),
                     self.cv_of([0.2, 0.8, 0.6], [0.2, 0.8, 0.6]))
        t_auc_only = (self.cv_of([0.5, 0.5, 0.5], [0.9, 0.91, 0.92]),
                      self.cv_of([0.5, 0.5, 0.5], [0.3, 0.31, 0.32]))
        f_f1_only = (self.cv_of([0.3, 0.31, 0.32], [0.5, 0.5, 0.5]),
                     self.cv_of([0.9, 0.91, 0.92], [0.5, 0.5, 0.5]))
        cases = [t_win, f_win, tie_same, tie_noisy, t_auc_only, f_f1_only]
        tallies = compare_representations([c[0] for c in cases], [c[1] for c in cases])
        assert tallies["auc"] == {"T>F": 2, "F>T": 1, "T=F": 3}
        assert tallies["f1"] == {"T>F": 1, "F>T": 2, "T=F": 3}

    def test_length_mismatch(self):
        a = self.cv_of([0.5] * 3, [0.5] * 3)
        with pytest.raises(ValueError, match="paired"):
            compare_representations([a], [a, a])


class TestGradeLabel:
    def test_at_risk_mapping(self):
        assert GradeLabel("D").at_risk
        assert GradeLabel("F").at_risk
        assert not GradeLabel("A").at_risk
        assert not GradeLabel("C").at_risk

    def test_unknown_grade(self):
        with pytest.raises(ValueError, match="grade"):
            GradeLabel("E")


def test_f1_score_edge_cases():
    assert f1_score([1, 1, 0], [1, 0, 0]) == 2 / 3
    assert f1_score([0, 0], [0, 0]) == 0.0
    assert f1_score([1, 1], [1, 1]) == 1.0
