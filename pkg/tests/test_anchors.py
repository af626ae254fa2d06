import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anchoraug.anchors import (
    AnchorAssignment,
    CompactProjection,
    as_projection,
    build_anchor_matrix,
    center_dataset,
    project_group_mean,
    projection_compact,
    projection_dense,
    projection_row_sum,
)
from anchoraug.exceptions import DataError, DimensionMismatchError, LabelRangeError


def group_mean_oracle(labels, m):
    # plain python loop, independent of np.add.at
    out = np.empty_like(m, dtype=float)
    for g in set(labels.tolist()):
        rows = [i for i, lab in enumerate(labels) if lab == g]
        out[rows] = np.mean(m[rows], axis=0)
    return out


@st.composite
def assignments(draw, max_n=200, max_q=10):
    n = draw(st.integers(1, max_n))
    q = draw(st.integers(1, max_q))
    seed = draw(st.integers(0, 2**32 - 1))
    labels = np.random.default_rng(seed).integers(q, size=n)
    return AnchorAssignment(labels, q), seed


class TestCentering:
    def test_two_points(self):
        c = center_dataset([[1.0], [3.0]], [2.0, 4.0])
        np.testing.assert_array_equal(c.x, [[-1.0], [1.0]])
        np.testing.assert_array_equal(c.y, [-1.0, 1.0])
        assert c.x_mean.tolist() == [2.0] and c.y_mean == 3.0

    def test_already_centered(self):
        x = np.array([[-1.0, 2.0], [1.0, -2.0]])
        c = center_dataset(x, [0.5, -0.5])
        np.testing.assert_array_equal(c.x, x)
        assert np.all(c.x_mean == 0) and c.y_mean == 0

    def test_column_means(self):
        c = center_dataset([[1, 10], [3, 20], [5, 30]], [0, 0, 0])
        np.testing.assert_allclose(c.x_mean, [3, 20])
        np.testing.assert_allclose(c.x, [[-2, -10], [0, 0], [2, 10]])

    def test_length_mismatch_names_both(self):
        with pytest.raises(DimensionMismatchError, match="3.*2|2.*3"):
            center_dataset(np.zeros((3, 1)), np.zeros(2))

    def test_non_finite(self):
        with pytest.raises(DataError):
            center_dataset([[np.nan]], [1.0])

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 40), st.integers(1, 5), st.integers(0, 10**6))
    def test_round_trip(self, n, d, seed):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=(n, d)) * 10 + 3
        y = rng.normal(size=n) - 7
        c = center_dataset(x, y)
        assert np.max(np.abs(c.x.mean(axis=0))) < 1e-9
        assert abs(c.y.mean()) < 1e-9
        x2, y2 = c.uncenter(c.x, c.y)
        np.testing.assert_allclose(x2, x, rtol=0, atol=1e-12)
        np.testing.assert_allclose(y2, y, rtol=0, atol=1e-12)


class TestAssignment:
    def test_label_out_of_range(self):
        with pytest.raises(LabelRangeError, match="index 1"):
            AnchorAssignment([0, 2], 2)

    def test_bad_q_and_weights(self):
        with pytest.raises(ValueError):
            AnchorAssignment([0], 0)
        with pytest.raises(ValueError):
            AnchorAssignment([0, 0], 1, weights=[1.0, 0.0])

    def test_subset_recomputes_sizes(self):
        a = AnchorAssignment([0, 0, 1, 1, 1], 3)
        assert a.group_sizes.tolist() == [2, 3, 0]
        assert a.subset([0, 2]).group_sizes.tolist() == [1, 1, 0]


class TestAnchorMatrix:
    def test_one_hot(self):
        a = build_anchor_matrix(AnchorAssignment([0, 0, 1], 2))
        np.testing.assert_array_equal(a, [[1, 0], [1, 0], [0, 1]])

    def test_single(self):
        np.testing.assert_array_equal(build_anchor_matrix(AnchorAssignment([0], 1)), [[1]])

    def test_weighted_sqrt(self):
        a = build_anchor_matrix(AnchorAssignment([0, 1], 2, weights=[4.0, 9.0]))
        np.testing.assert_array_equal(a, [[2, 0], [0, 3]])


class TestProjection:
    def test_block_average(self):
        pi = projection_dense([[1, 0], [1, 0], [0, 1]]).pi
        np.testing.assert_allclose(pi, [[0.5, 0.5, 0], [0.5, 0.5, 0], [0, 0, 1]], atol=1e-15)

    def test_all_ones(self):
        pi = projection_dense(np.ones((6, 1)))
        np.testing.assert_allclose(pi.pi, np.full((6, 6), 1 / 6), atol=1e-15)
        assert projection_row_sum(pi, 3) == pytest.approx(1.0, abs=1e-12)

    def test_group_mean_small(self):
        out = project_group_mean(AnchorAssignment([0, 0, 1], 2), np.array([[0.0], [2.0], [5.0]]))
        np.testing.assert_array_equal(out, [[1.0], [1.0], [5.0]])

    def test_singletons_identity(self):
        m = np.random.default_rng(1).normal(size=(7, 3))
        np.testing.assert_array_equal(project_group_mean(AnchorAssignment(np.arange(7), 7), m), m)

    def test_random_n50_q5(self):
        rng = np.random.default_rng(3)
        a = AnchorAssignment(rng.integers(5, size=50), 5)
        m = rng.normal(size=(50, 4))
        dense = projection_dense(build_anchor_matrix(a))
        np.testing.assert_allclose(project_group_mean(a, m), dense.apply(m), rtol=0, atol=1e-10)
        np.testing.assert_allclose(project_group_mean(a, m), group_mean_oracle(a.labels, m),
                                   rtol=0, atol=1e-12)

    def test_empty_group_column(self):
        a = AnchorAssignment([0, 0, 2, 2], 3)
        dense = projection_dense(build_anchor_matrix(a)).pi
        np.testing.assert_allclose(projection_compact(a).to_dense(), dense, atol=1e-12)

    def test_weighted_row_sums_match_dense(self):
        rng = np.random.default_rng(5)
        a = AnchorAssignment(rng.integers(3, size=12), 3, weights=rng.uniform(0.5, 4, 12))
        dense = projection_dense(build_anchor_matrix(a))
        comp = projection_compact(a)
        np.testing.assert_allclose(comp.row_sums(), dense.pi.sum(axis=1), atol=1e-12)
        m = rng.normal(size=(12, 2))
        np.testing.assert_allclose(comp.apply(m), dense.apply(m), atol=1e-12)
        for i in range(12):
            assert projection_row_sum(comp, i) == pytest.approx(dense.pi[i].sum(), abs=1e-12)

    def test_row_sum_index_error(self):
        with pytest.raises(IndexError):
            projection_row_sum(projection_compact(AnchorAssignment([0], 1)), 1)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            project_group_mean(AnchorAssignment([0, 1], 2), np.zeros((3, 1)))

    def test_as_projection(self):
        a = AnchorAssignment([0], 1)
        assert isinstance(as_projection(a), CompactProjection)
        with pytest.raises(TypeError):
            as_projection([0])

    def test_deterministic_bitwise(self):
        rng = np.random.default_rng(8)
        a = AnchorAssignment(rng.integers(4, size=100), 4)
        m = rng.normal(size=(100, 3))
        assert project_group_mean(a, m).tobytes() == project_group_mean(a, m).tobytes()

    @settings(max_examples=60, deadline=None)
    @given(assignments())
    def test_oracle_equivalence(self, drawn):
        a, seed = drawn
        m = np.random.default_rng(seed + 1).normal(size=(a.n, 3))
        dense = projection_dense(build_anchor_matrix(a))
        np.testing.assert_allclose(project_group_mean(a, m), dense.apply(m), rtol=0, atol=1e-10)

    @settings(max_examples=60, deadline=None)
    @given(assignments(max_n=80))
    def test_dense_symmetric_idempotent_rowsum(self, drawn):
        a, _ = drawn
        pi = projection_dense(build_anchor_matrix(a)).pi
        assert np.max(np.abs(pi - pi.T)) < 1e-10
        assert np.max(np.abs(pi @ pi - pi)) < 1e-8
        assert np.max(np.abs(pi.sum(axis=1) - 1)) < 1e-10

    @settings(max_examples=40, deadline=None)
    @given(assignments(max_n=60), st.integers(0, 10**6))
    def test_weighted_idempotent(self, drawn, wseed):
        a, _ = drawn
        w = np.random.default_rng(wseed).uniform(0.1, 10, a.n)
        pi = projection_dense(build_anchor_matrix(AnchorAssignment(a.labels, a.q, w))).pi
        assert np.max(np.abs(pi @ pi - pi)) < 1e-8
