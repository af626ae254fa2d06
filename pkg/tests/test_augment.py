import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anchoraug.anchors import AnchorAssignment, build_anchor_matrix, projection_dense
from anchoraug.augment import (
    ADAHook,
    AnchorAugmenter,
    CMixupAugmenter,
    GammaPrior,
    MixupAugmenter,
    ada_minibatch,
    ada_transform,
    ar_transform,
    augment_dataset_offline,
    cmixup_minibatch,
    cmixup_partner_probs,
    gamma_grid,
    mixup_minibatch,
    sample_gamma,
)
from anchoraug.datagen import ILLUSTRATION_CONFIG, CosineConfig, gen_cosine
from anchoraug.exceptions import ConfigError, DataError, ZeroDenominatorError
from anchoraug.partitioning import KMeansConfig, kmeans


def centroids(labels, v):
    out = np.empty_like(v)
    for g in np.unique(labels):
        out[labels == g] = v[labels == g].mean(axis=0)
    return out


def ada_dense(x, y, labels, q, gamma):
    # direct evaluation of the row-normalised formula with an explicit matrix
    pi = projection_dense(build_anchor_matrix(AnchorAssignment(labels, q))).pi
    s = np.sqrt(gamma) - 1
    den = 1 + s * pi.sum(axis=1)
    return (x + s * pi @ x) / den[:, None], (y + s * pi @ y) / den


@st.composite
def problems(draw):
    n = draw(st.integers(2, 60))
    q = draw(st.integers(1, 6))
    d = draw(st.integers(1, 4))
    seed = draw(st.integers(0, 10**6))
    gamma = draw(st.floats(0.05, 50.0))
    rng = np.random.default_rng(seed)
    return rng.normal(size=(n, d)), rng.normal(size=n), rng.integers(q, size=n), q, gamma


class TestGamma:
    def test_grid_k4(self):
        np.testing.assert_allclose(gamma_grid(2, 4).values, [0.5, 2 / 3, 1, 1.5, 2], atol=1e-15)

    def test_grid_k2(self):
        assert gamma_grid(2, 2).values.tolist() == [0.5, 1.0, 2.0]

    @pytest.mark.parametrize("alpha,k", [(2, 10), (8, 100), (3.5, 6), (1.5, 4)])
    def test_grid_reciprocal_and_sorted(self, alpha, k):
        v = gamma_grid(alpha, k).values
        assert len(v) == k + 1 and np.sum(v == 1.0) == 1
        assert np.all(np.diff(v) > 0)
        np.testing.assert_allclose(v * v[::-1], 1.0, atol=1e-12)
        assert v[-1] == alpha

    def test_grid_validation(self):
        for alpha, k in [(1, 4), (2, 3), (2, 0)]:
            with pytest.raises(ConfigError):
                gamma_grid(alpha, k)

    def test_prior_mean(self):
        rng = np.random.default_rng(0)
        draws = [sample_gamma(GammaPrior(2.0), rng) for _ in range(100_000)]
        assert abs(np.mean(draws) - 1.25) < 0.01
        assert min(draws) >= 0.5 and max(draws) <= 2.0

    def test_prior_degenerate_and_seeded(self):
        g = sample_gamma(GammaPrior(1 + 1e-9), np.random.default_rng(1))
        assert abs(g - 1) < 1e-8
        assert (sample_gamma(GammaPrior(3), np.random.default_rng(5))
                == sample_gamma(GammaPrior(3), np.random.default_rng(5)))
        with pytest.raises(ConfigError):
            GammaPrior(1.0)


class TestTransforms:
    one_group = AnchorAssignment([0, 0], 1)

    def test_ar_example(self):
        xt, yt = ar_transform([[0.0], [2.0]], [0.0, 2.0], self.one_group, 4.0)
        np.testing.assert_array_equal(xt, [[1.0], [3.0]])
        np.testing.assert_array_equal(yt, [1.0, 3.0])

    def test_ada_example(self):
        xt, yt = ada_transform([[0.0], [2.0]], [0.0, 2.0], self.one_group, 4.0)
        np.testing.assert_array_equal(xt, [[0.5], [1.5]])
        np.testing.assert_array_equal(yt, [0.5, 1.5])

    def test_ar_gamma_zero_is_within_group_centering(self):
        rng = np.random.default_rng(0)
        x, y, lab = rng.normal(size=(12, 2)), rng.normal(size=12), rng.integers(3, size=12)
        xt, yt = ar_transform(x, y, AnchorAssignment(lab, 3), 0.0)
        np.testing.assert_allclose(xt, x - centroids(lab, x), atol=1e-12)
        np.testing.assert_allclose(yt, y - centroids(lab, y[:, None])[:, 0], atol=1e-12)

    def test_ada_gamma_zero_rejected(self):
        with pytest.raises(ZeroDenominatorError):
            ada_transform([[0.0], [1.0]], [0.0, 1.0], self.one_group, 0.0)

    def test_negative_gamma(self):
        with pytest.raises(ConfigError):
            ar_transform([[0.0]], [0.0], AnchorAssignment([0], 1), -1.0)

    def test_one_dim_input_stays_one_dim(self):
        xt, _ = ada_transform(np.array([0.0, 2.0]), [0.0, 2.0], self.one_group, 4.0)
        assert xt.shape == (2,)

    def test_projection_size_mismatch(self):
        with pytest.raises(DataError):
            ada_transform([[0.0]], [0.0], self.one_group, 2.0)

    def test_inputs_not_mutated(self):
        x = np.arange(6.0).reshape(3, 2)
        y = np.arange(3.0)
        xc, yc = x.copy(), y.copy()
        ada_transform(x, y, AnchorAssignment([0, 0, 1], 2), 3.0)
        ar_transform(x, y, AnchorAssignment([0, 0, 1], 2), 3.0)
        np.testing.assert_array_equal(x, xc)
        np.testing.assert_array_equal(y, yc)

    @settings(max_examples=80, deadline=None)
    @given(problems())
    def test_gamma_one_identity(self, p):
        x, y, lab, q, _ = p
        a = AnchorAssignment(lab, q)
        for f in (ada_transform, ar_transform):
            xt, yt = f(x, y, a, 1.0)
            assert xt.tobytes() == x.tobytes() and yt.tobytes() == y.tobytes()

    @settings(max_examples=80, deadline=None)
    @given(problems())
    def test_matches_direct_dense_formula(self, p):
        x, y, lab, q, gamma = p
        xt, yt = ada_transform(x, y, AnchorAssignment(lab, q), gamma)
        xd, yd = ada_dense(x, y, lab, q, gamma)
        np.testing.assert_allclose(xt, xd, rtol=1e-10, atol=1e-10)
        np.testing.assert_allclose(yt, yd, rtol=1e-10, atol=1e-10)

    @settings(max_examples=80, deadline=None)
    @given(problems())
    def test_scaling_relation(self, p):
        x, y, lab, q, gamma = p
        a = AnchorAssignment(lab, q)
        xa, ya = ada_transform(x, y, a, gamma)
        xr, yr = ar_transform(x, y, a, gamma)
        np.testing.assert_allclose(xa, xr / np.sqrt(gamma), rtol=0, atol=1e-12 * max(1, np.abs(xr).max()))
        np.testing.assert_allclose(ya, yr / np.sqrt(gamma), rtol=0, atol=1e-12 * max(1, np.abs(yr).max()))

    @settings(max_examples=80, deadline=None)
    @given(problems())
    def test_centroid_ray_and_group_means(self, p):
        x, y, lab, q, gamma = p
        xt, yt = ada_transform(x, y, AnchorAssignment(lab, q), gamma)
        cx, cy = centroids(lab, x), centroids(lab, y[:, None])[:, 0]
        np.testing.assert_allclose(xt - cx, (x - cx) / np.sqrt(gamma), atol=1e-9)
        np.testing.assert_allclose(yt - cy, (y - cy) / np.sqrt(gamma), atol=1e-9)
        np.testing.assert_allclose(centroids(lab, xt), cx, atol=1e-9)
        np.testing.assert_allclose(centroids(lab, yt[:, None])[:, 0], cy, atol=1e-9)


class TestMinibatch:
    def test_degenerate_prior(self):
        rng = np.random.default_rng(0)
        x, y = rng.normal(size=(8, 2)), rng.normal(size=8)
        out = ada_minibatch(x, y, AnchorAssignment(rng.integers(2, size=8), 2), 1.0, rng)
        np.testing.assert_array_equal(out.x, x)
        np.testing.assert_array_equal(out.y, y)

    def test_singleton_groups(self):
        rng = np.random.default_rng(1)
        x, y = rng.normal(size=(4, 2)), rng.normal(size=4)
        out = ada_minibatch(x, y, AnchorAssignment([0, 1, 2, 3], 4), GammaPrior(5.0), rng)
        np.testing.assert_allclose(out.x, x, atol=1e-15)
        np.testing.assert_allclose(out.y, y, atol=1e-15)

    def test_matches_offline_transform(self):
        rng = np.random.default_rng(2)
        x, y = rng.normal(size=(16, 3)), rng.normal(size=16)
        a = AnchorAssignment(rng.integers(4, size=16), 4)
        out = ada_minibatch(x, y, a, GammaPrior(2.0), np.random.default_rng(7))
        expect_gamma = np.random.default_rng(7).uniform(0.5, 2.0)
        assert out.gamma == expect_gamma
        xt, yt = ada_transform(x, y, a, expect_gamma)
        np.testing.assert_array_equal(out.x, xt)
        np.testing.assert_array_equal(out.y, yt)

    def test_pure_and_repeatable(self):
        rng = np.random.default_rng(3)
        x, y = rng.normal(size=(10, 2)), rng.normal(size=10)
        a = AnchorAssignment(rng.integers(3, size=10), 3)
        xc, yc = x.copy(), y.copy()
        o1 = ada_minibatch(x, y, a, GammaPrior(3.0), np.random.default_rng(11))
        o2 = ada_minibatch(x, y, a, GammaPrior(3.0), np.random.default_rng(11))
        np.testing.assert_array_equal(x, xc)
        np.testing.assert_array_equal(y, yc)
        assert o1.x.tobytes() == o2.x.tobytes() and o1.gamma == o2.gamma

    def test_batch_group_sizes_local(self):
        # groups are averaged over the batch rows only
        lab = np.array([0, 0, 0, 1])
        hook = ADAHook(4.0, AnchorAssignment(lab, 2))
        bx = np.array([[0.0], [2.0]])
        xt, _ = hook(bx, np.array([0.0, 2.0]), np.array([0, 1]), np.random.default_rng(0))
        np.testing.assert_allclose(xt, [[0.5], [1.5]])

    def test_hook_keeps_shapes(self):
        rng = np.random.default_rng(4)
        x, y = rng.normal(size=(9, 3)), rng.normal(size=9)
        a = AnchorAssignment(rng.integers(3, size=30), 3)
        idx = np.arange(9) * 3
        for hook in (ADAHook(GammaPrior(2.0), a), CMixupAugmenter().make_hook(x, y),
                     MixupAugmenter().make_hook(x, y)):
            xt, yt = hook(x, y, idx, rng)
            assert xt.shape == x.shape and yt.shape == y.shape


class TestOffline:
    def test_identity_grid(self):
        x, y = np.arange(6.0).reshape(3, 2), np.arange(3.0)
        xa, ya = augment_dataset_offline(x, y, AnchorAssignment([0, 0, 1], 2), [1.0])
        np.testing.assert_array_equal(xa, x)
        np.testing.assert_array_equal(ya, y)

    def test_row_count(self):
        x, y = gen_cosine(CosineConfig(n=20, seed=0))
        a = kmeans(x, KMeansConfig(5)).assignment
        xa, ya, src, gam = augment_dataset_offline(x, y, a, gamma_grid(2, 10), return_meta=True)
        assert xa.shape == (220, 1) and ya.shape == (220,)
        assert np.bincount(src).tolist() == [11] * 20
        assert np.unique(gam).size == 11

    def test_cosine_colinearity(self):
        x, y = gen_cosine(CosineConfig(n=40, seed=3))
        a = kmeans(x, KMeansConfig(5)).assignment
        xa, ya, src, gam = augment_dataset_offline(x, y, a, gamma_grid(2, 4), return_meta=True)
        cx, cy = centroids(a.labels, x)[:, 0], centroids(a.labels, y[:, None])[:, 0]
        u = np.c_[x[src, 0] - cx[src], y[src] - cy[src]]
        v = np.c_[xa[:, 0] - cx[src], ya - cy[src]]
        cross = u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]
        assert np.max(np.abs(cross)) < 1e-9

    def test_illustration_count(self):
        x, y = gen_cosine(ILLUSTRATION_CONFIG)
        a = kmeans(x, KMeansConfig(5)).assignment
        xa, _ = augment_dataset_offline(x, y, a, gamma_grid(2, 4))
        assert xa.shape[0] == 150


class TestMixup:
    def test_cmixup_lambda_one(self):
        rng = np.random.default_rng(0)
        x, y = rng.normal(size=(6, 2)), rng.normal(size=6)
        out = cmixup_minibatch(x, y, rng=rng, lam=1.0)
        np.testing.assert_array_equal(out.x, x)
        np.testing.assert_array_equal(out.y, y)

    def test_cmixup_two_samples(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            out = cmixup_minibatch([[0.0], [1.0]], [0.0, 5.0], 0.1, rng=rng)
            assert out.partners.tolist() == [1, 0]

    def test_cmixup_partner_frequencies(self):
        y = np.array([0.0, 0.3, 1.0, 2.5, 2.6])
        h = 0.2
        k = np.exp(-((y[:, None] - y[None, :]) ** 2) / (2 * h * h))
        np.fill_diagonal(k, 0)
        expect = k / k.sum(axis=1, keepdims=True)
        np.testing.assert_allclose(cmixup_partner_probs(y, h), expect, atol=1e-14)
        rng = np.random.default_rng(2)
        counts = np.zeros((5, 5))
        draws = 10_000
        for _ in range(draws):
            out = cmixup_minibatch(y[:, None], y, h, rng=rng)
            counts[np.arange(5), out.partners] += 1
        tv = 0.5 * np.abs(counts / draws - expect).sum(axis=1)
        assert tv.max() < 0.02

    def test_cmixup_small_bandwidth_nearest(self):
        p = cmixup_partner_probs(np.array([0.0, 1.0, 3.0]), 1e-3)
        assert np.argmax(p, axis=1).tolist() == [1, 0, 1]
        assert np.all(np.isfinite(p))

    def test_mixup_identity_and_midpoint(self):
        rng = np.random.default_rng(3)
        out = mixup_minibatch([[0.0], [2.0]], [0.0, 2.0], rng=rng, lam=1.0)
        np.testing.assert_array_equal(out.x, [[0.0], [2.0]])
        out = mixup_minibatch([[0.0], [2.0]], [0.0, 2.0], rng=rng, lam=0.5)
        np.testing.assert_array_equal(out.x, [[1.0], [1.0]])

    @settings(max_examples=60, deadline=None)
    @given(st.integers(2, 30), st.integers(0, 10**6))
    def test_mixup_convex_hull(self, n, seed):
        rng = np.random.default_rng(seed)
        x, y = rng.normal(size=(n, 3)), rng.normal(size=n)
        out = mixup_minibatch(x, y, 0.5, rng)
        j = out.partners
        assert np.all(j != np.arange(n))
        lo, hi = np.minimum(x, x[j]), np.maximum(x, x[j])
        assert np.all(out.x >= lo - 1e-12) and np.all(out.x <= hi + 1e-12)
        assert np.all(out.y >= np.minimum(y, y[j]) - 1e-12)
        assert np.all(out.y <= np.maximum(y, y[j]) + 1e-12)

    def test_too_small(self):
        with pytest.raises(DataError):
            mixup_minibatch([[0.0]], [0.0], rng=np.random.default_rng(0))


class TestAugmenter:
    def test_fit_resample(self):
        x, y = gen_cosine(CosineConfig(n=20, seed=1))
        aug = AnchorAugmenter(alpha=2, n_groups=5, n_augmentations=10, random_state=0)
        xa, ya, src, gam = aug.fit_resample(x, y, return_meta=True)
        assert xa.shape == (220, 1)
        keep = gam == 1.0
        np.testing.assert_array_equal(xa[keep], x[src[keep]])

    def test_resample_size_check(self):
        x, y = gen_cosine(CosineConfig(n=20, seed=1))
        aug = AnchorAugmenter(n_groups=3).fit(x, y)
        with pytest.raises(DataError):
            aug.resample(x[:5], y[:5])

    def test_sklearn_params(self):
        aug = AnchorAugmenter(alpha=3)
        assert aug.get_params()["alpha"] == 3
        assert aug.set_params(n_groups=4).n_groups == 4
