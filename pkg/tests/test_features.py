import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import f_oneway

from qkscreen.features import (
    FeatureError,
    FeaturePipeline,
    angle_apply,
    angle_fit,
    anova_f_scores,
    anova_select,
    fit_pipeline,
    pca_fit,
    pca_inverse,
    pca_transform,
    standardize_apply,
    standardize_fit,
)


class TestStandardize:
    def test_hand_values(self):
        s = standardize_fit([[1.0], [2.0], [3.0]])
        assert s.mean[0] == 2.0 and s.std[0] == pytest.approx(math.sqrt(2 / 3))
        out = standardize_apply(s, [[1.0], [2.0], [3.0]])[:, 0]
        np.testing.assert_allclose(out, [-1.224744871391589, 0.0, 1.224744871391589], atol=1e-12)

    def test_constant_column(self):
        s = standardize_fit([[5.0, 1.0], [5.0, 2.0], [5.0, 3.0]])
        assert s.constant_columns.tolist() == [0]
        assert standardize_apply(s, [[5.0, 1.0], [7.0, 1.0]])[:, 0].tolist() == [0.0, 0.0]

    def test_training_mean_zero(self):
        X = np.random.default_rng(0).normal(3, 4, size=(30, 5))
        Z = standardize_apply(standardize_fit(X), X)
        assert np.abs(Z.mean(axis=0)).max() < 1e-12

    def test_column_mismatch(self):
        with pytest.raises(FeatureError, match="mismatch"):
            standardize_apply(standardize_fit(np.ones((3, 2))), np.ones((3, 3)))


class TestPca:
    def test_collinear(self):
        m = pca_fit([[1, 1], [2, 2], [3, 3]], 2)
        np.testing.assert_allclose(m.components[0], [1 / math.sqrt(2), 1 / math.sqrt(2)], atol=1e-12)
        assert abs(m.explained_variance[1]) < 1e-10

    def test_full_rank_reconstruction(self):
        X = np.random.default_rng(1).normal(size=(12, 4))
        m = pca_fit(X, 4)
        back = pca_inverse(m, pca_transform(m, X))
        np.testing.assert_allclose(back, X - X.mean(axis=0), atol=1e-8)

    def test_variances_match_covariance_eigenvalues(self):
        X = np.random.default_rng(2).normal(size=(20, 6))
        m = pca_fit(X, 3)
        eig = np.sort(np.linalg.eigvalsh(np.cov(X, rowvar=False)))[::-1]
        np.testing.assert_allclose(m.explained_variance, eig[:3], atol=1e-8)
        assert np.all(np.diff(m.explained_variance) <= 0)

    def test_orthonormal_and_sign_convention(self):
        X = np.random.default_rng(3).normal(size=(25, 7))
        m = pca_fit(X, 5)
        np.testing.assert_allclose(m.components @ m.components.T, np.eye(5), atol=1e-10)
        for row in m.components:
            assert row[np.argmax(np.abs(row))] > 0

    def test_projection_uncorrelated(self):
        X = np.random.default_rng(4).normal(size=(40, 6)) @ np.random.default_rng(5).normal(size=(6, 6))
        P = pca_transform(pca_fit(X, 6), X)
        C = np.cov(P, rowvar=False)
        assert np.abs(C - np.diag(np.diag(C))).max() <= 1e-8

    def test_too_many(self):
        with pytest.raises(FeatureError):
            pca_fit(np.ones((3, 5)), 3)


def anova_direct(col, y):
    """Textbook one-way ANOVA for a single column, straight from the sums of squares."""
    groups = [col[y == c] for c in np.unique(y)]
    grand = col.mean()
    ssb = sum(len(g) * (g.mean() - grand) ** 2 for g in groups)
    ssw = sum(((g - g.mean()) ** 2).sum() for g in groups)
    return (ssb / (len(groups) - 1)) / (ssw / (len(col) - len(groups)))


class TestAnova:
    def test_hand_value(self):
        f = anova_f_scores([[0.0], [1.0], [2.0], [3.0]], [-1, -1, 1, 1])
        assert f[0] == pytest.approx(8.0, abs=1e-12)

    def test_identical_classes(self):
        f = anova_f_scores([[1.0], [2.0], [1.0], [2.0]], [-1, -1, 1, 1])
        assert f[0] == 0.0

    def test_infinite_sentinel_ranks_first(self):
        X = [[0.0, 0.0, 9.0], [0.0, 1.0, 1.0], [1.0, 2.0, 8.0], [1.0, 3.0, 2.0]]
        y = [-1, -1, 1, 1]
        sel = anova_select(X, y, 2)
        assert sel.f_scores[0] == np.inf
        assert sel.indices.tolist() == [0, 1]

    def test_ties_lower_index(self):
        X = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
        assert anova_select(X, [-1, -1, 1, 1], 1).indices.tolist() == [0]

    def test_small_class(self):
        with pytest.raises(FeatureError):
            anova_f_scores([[0.0], [1.0], [2.0]], [-1, 1, 1])

    def test_matches_direct_formula_and_scipy(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            X = rng.normal(size=(30, 5))
            y = rng.permutation([1] * 12 + [-1] * 18)
            X[y == 1] += rng.normal(size=5)
            f = anova_f_scores(X, y)
            for j in range(5):
                assert f[j] == pytest.approx(anova_direct(X[:, j], y), rel=1e-10, abs=1e-10)
            np.testing.assert_allclose(f, f_oneway(X[y == 1], X[y == -1]).statistic, rtol=1e-10)

    @settings(max_examples=60, deadline=None)
    @given(
        st.integers(0, 10_000),
        st.lists(st.floats(0.1, 50) | st.floats(-50, -0.1), min_size=6, max_size=6),
        st.lists(st.floats(-100, 100), min_size=6, max_size=6),
        st.integers(1, 6),
    )
    def test_affine_invariance(self, seed, scales, shifts, n):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(24, 6))
        y = rng.permutation([1] * 10 + [-1] * 14)
        X[y == 1] += rng.normal(scale=0.7, size=6)
        base = anova_select(X, y, n)
        moved = anova_select(X * np.array(scales) + np.array(shifts), y, n)
        # rounding can only reorder near-equal scores; require exact set equality when
        # the scores are separated by more than floating noise
        f = np.sort(base.f_scores)[::-1]
        if n < 6 and abs(f[n - 1] - f[n]) < 1e-9 * max(1.0, f[n - 1]):
            return
        assert set(base.indices.tolist()) == set(moved.indices.tolist())


class TestAngles:
    def test_endpoints(self):
        s = angle_fit([[0.0], [5.0], [10.0]])
        np.testing.assert_allclose(angle_apply(s, [[0.0], [5.0], [10.0]])[:, 0], [0, math.pi / 2, math.pi])

    def test_clipping(self):
        s = angle_fit([[0.0], [10.0]])
        assert angle_apply(s, [[12.0]])[0, 0] == math.pi
        assert angle_apply(s, [[-3.0]])[0, 0] == 0.0

    def test_degenerate(self):
        s = angle_fit([[4.0], [4.0]])
        assert angle_apply(s, [[4.0], [9.0]])[:, 0].tolist() == [math.pi / 2] * 2

    def test_custom_top(self):
        s = angle_fit([[0.0], [2.0]], top=1.0)
        assert angle_apply(s, [[1.0], [5.0]])[:, 0].tolist() == [0.5, 1.0]


class TestPipeline:
    def data(self):
        rng = np.random.default_rng(9)
        X = rng.normal(size=(40, 8))
        y = np.array([1] * 20 + [-1] * 20)
        X[y == 1, 2] += 3
        return X, y

    @pytest.mark.parametrize("selector", ["pca", "anova"])
    def test_round_trip(self, selector):
        X, y = self.data()
        pipe = fit_pipeline(X, y, selector, 3, ids=[f"r{i}" for i in range(40)])
        again = FeaturePipeline.from_json(pipe.to_json())
        np.testing.assert_array_equal(again.transform(X), pipe.transform(X))
        assert again.fit_ids == pipe.fit_ids

    def test_train_only_statistics(self):
        X, y = self.data()
        train, test = np.arange(30), np.arange(30, 40)
        pipe = fit_pipeline(X[train], y[train], "pca", 2, ids=[str(i) for i in train])
        # parameters are a function of training rows alone
        shifted = X.copy()
        shifted[test] += 1000.0
        other = fit_pipeline(shifted[train], y[train], "pca", 2)
        np.testing.assert_array_equal(pipe.scaler.mean, other.scaler.mean)
        np.testing.assert_array_equal(pipe.angles.hi, other.angles.hi)
        assert not set(pipe.fit_ids) & {str(i) for i in test}
        out = pipe.transform(X[test] + 1000.0)
        assert out.min() >= 0 and out.max() <= math.pi

    def test_anova_picks_informative_column(self):
        X, y = self.data()
        pipe = fit_pipeline(X, y, "anova", 1)
        assert pipe.anova.indices.tolist() == [2]

    def test_unknown_selector(self):
        X, y = self.data()
        with pytest.raises(FeatureError):
            fit_pipeline(X, y, "lasso", 2)
