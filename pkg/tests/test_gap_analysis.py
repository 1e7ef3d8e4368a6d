import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import scipy.stats

from mergap.gap_analysis import (
    cluster_composition,
    divergence_matrix,
    inter_centroid_stats,
    js_divergence,
    js_from_histograms,
    kmeans,
    sliced_wasserstein,
    tsne,
    unit_projections,
    w1_1d,
    w1_projection_factor,
)


class TestProjections:
    def test_unit_norm(self):
        theta = unit_projections(5, 64, seed=0)
        assert theta.shape == (64, 5)
        assert np.allclose(np.linalg.norm(theta, axis=1), 1.0, atol=1e-12)

    def test_deterministic(self):
        a = unit_projections(3, 16, seed=7)
        b = unit_projections(3, 16, seed=7)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, unit_projections(3, 16, seed=8))


class TestW1OneDim:
    def test_hand_case_equal_sizes(self):
        # optimal pairing after sorting: |1-2| + |3-4| = 2, mean 1.0
        assert w1_1d(np.array([3.0, 1.0]), np.array([2.0, 4.0])) == 1.0

    def test_hand_case_unequal_sizes(self):
        # {0} vs {0, 1}: CDF difference is 1/2 on [0, 1]
        assert w1_1d(np.array([0.0]), np.array([0.0, 1.0])) == pytest.approx(0.5)

    def test_identical(self, rng):
        x = rng.standard_normal(40)
        assert w1_1d(x, x.copy()) == 0.0

    @settings(max_examples=60, deadline=None)
    @given(
        x=st.lists(st.floats(-50, 50), min_size=1, max_size=30),
        y=st.lists(st.floats(-50, 50), min_size=1, max_size=30),
    )
    def test_matches_scipy(self, x, y):
        ours = w1_1d(np.array(x), np.array(y))
        ref = scipy.stats.wasserstein_distance(x, y)
        assert ours == pytest.approx(ref, abs=1e-9)


class TestSlicedWasserstein:
    def test_identical_clouds(self, rng):
        x = rng.standard_normal((30, 4))
        assert sliced_wasserstein(x, x.copy(), seed=1) == 0.0

    def test_shift_along_first_axis_is_exactly_reconstructible(self, rng):
        # shifting a cloud by delta*e1 makes every 1-D projection a shift
        # by delta*theta_1, so the sliced value equals delta * mean|theta_1|
        x = rng.standard_normal((64, 3))
        y = x + np.array([0.2, 0.0, 0.0])
        got = sliced_wasserstein(x, y, n_projections=128, seed=5)
        theta = unit_projections(3, 128, seed=5)
        assert got == pytest.approx(0.2 * np.mean(np.abs(theta[:, 0])), abs=1e-12)

    def test_one_dim_matches_exact(self, rng):
        x = rng.standard_normal((25, 1))
        y = rng.standard_normal((35, 1)) + 1.0
        got = sliced_wasserstein(x, y, n_projections=8, seed=0)
        # every unit projection in 1-D is +-1 and W1 is symmetric under sign flips
        assert got == pytest.approx(w1_1d(x[:, 0], y[:, 0]), abs=1e-12)

    def test_symmetry(self, rng):
        x = rng.standard_normal((20, 3))
        y = rng.standard_normal((30, 3)) + 0.5
        assert sliced_wasserstein(x, y, seed=3) == pytest.approx(
            sliced_wasserstein(y, x, seed=3), abs=1e-12
        )

    def test_projection_factor(self):
        assert w1_projection_factor(1) == pytest.approx(1.0)
        assert w1_projection_factor(2) == pytest.approx(2.0 / np.pi)
        assert w1_projection_factor(3) == pytest.approx(0.5)

    def test_rejects_dim_mismatch(self, rng):
        with pytest.raises(ValueError):
            sliced_wasserstein(rng.standard_normal((5, 2)), rng.standard_normal((5, 3)))


class TestJsDivergence:
    def test_hand_histogram_case(self):
        # two-bin histograms 0.5/0.5 vs 0.9/0.1
        got = js_from_histograms(np.array([0.5, 0.5]), np.array([0.9, 0.1]))
        assert got == pytest.approx(0.146793, abs=1e-6)

    def test_sample_level_hand_case(self):
        # bins=2 over [0.25, 0.75] reproduces the histogram case above
        x = np.array([0.25] * 5 + [0.75] * 5).reshape(-1, 1)
        y = np.array([0.25] * 9 + [0.75] * 1).reshape(-1, 1)
        assert js_divergence(x, y, bins=2) == pytest.approx(0.146793, abs=1e-6)

    def test_identical_is_zero(self, rng):
        x = rng.standard_normal((50, 3))
        assert js_divergence(x, x.copy()) == pytest.approx(0.0, abs=1e-12)

    def test_disjoint_is_one(self):
        x = np.zeros((20, 1))
        y = np.ones((20, 1)) * 5.0
        assert js_divergence(x, y, bins=4) == pytest.approx(1.0, abs=1e-12)

    def test_symmetric_and_bounded(self, rng):
        x = rng.standard_normal((40, 2))
        y = rng.standard_normal((60, 2)) * 2.0 + 1.0
        d_xy = js_divergence(x, y)
        assert d_xy == pytest.approx(js_divergence(y, x), abs=1e-12)
        assert 0.0 <= d_xy <= 1.0

    def test_histogram_validation(self):
        with pytest.raises(ValueError):
            js_from_histograms(np.array([0.5, -0.5]), np.array([0.5, 0.5]))
        with pytest.raises(ValueError):
            js_from_histograms(np.array([0.0, 0.0]), np.array([1.0, 0.0]))


class TestDivergenceMatrix:
    def test_symmetric_with_zero_diagonal(self, rng):
        clouds = {
            "a": rng.standard_normal((30, 2)),
            "b": rng.standard_normal((30, 2)) + 1.0,
            "c": rng.standard_normal((30, 2)) - 1.0,
        }
        names, mat = divergence_matrix(clouds, metric="w1", seed=0)
        assert names == ("a", "b", "c")
        assert np.allclose(mat, mat.T, atol=1e-12)
        assert np.allclose(np.diag(mat), 0.0, atol=1e-12)
        assert mat[0, 1] > 0.3

    def test_js_metric_selected(self, rng):
        clouds = {"a": rng.standard_normal((30, 1)), "b": rng.standard_normal((30, 1))}
        _, mat = divergence_matrix(clouds, metric="js", bins=8)
        assert 0.0 <= mat[0, 1] <= 1.0

    def test_unknown_metric(self, rng):
        clouds = {"a": rng.standard_normal((5, 1)), "b": rng.standard_normal((5, 1))}
        with pytest.raises(ValueError, match="metric"):
            divergence_matrix(clouds, metric="kl")


def three_blobs(rng, n_per=40, sep=8.0):
    centers = np.array([[0.0, 0.0], [sep, 0.0], [0.0, sep]])
    pts = np.concatenate([rng.standard_normal((n_per, 2)) + c for c in centers])
    labels = np.repeat(np.arange(3), n_per)
    return pts, labels


def adjusted_rand(a, b):
    from scipy.special import comb

    n = len(a)
    pairs = comb(n, 2)
    ab = {}
    for x, y in zip(a, b):
        ab[(x, y)] = ab.get((x, y), 0) + 1
    sum_ab = sum(comb(v, 2) for v in ab.values())
    sum_a = sum(comb(np.sum(a == v), 2) for v in set(a))
    sum_b = sum(comb(np.sum(b == v), 2) for v in set(b))
    expected = sum_a * sum_b / pairs
    return (sum_ab - expected) / ((sum_a + sum_b) / 2 - expected)


class TestKmeans:
    def test_recovers_separated_blobs(self, rng):
        pts, labels = three_blobs(rng)
        res = kmeans(pts, k=3, seed=0)
        assert adjusted_rand(labels, res.assignments) > 0.99

    def test_inertia_history_is_monotone(self, rng):
        pts, _ = three_blobs(rng, sep=3.0)
        res = kmeans(pts, k=3, seed=1)
        hist = np.array(res.inertia_history)
        assert np.all(np.diff(hist) <= 1e-9)
        assert res.inertia == hist[-1]

    def test_k_equals_n_gives_zero_inertia(self, rng):
        pts = rng.standard_normal((7, 2))
        res = kmeans(pts, k=7, seed=0)
        assert res.inertia == pytest.approx(0.0, abs=1e-18)

    def test_duplicate_heavy_points_still_fill_k_clusters(self):
        # more clusters than distinct locations forces the empty-cluster
        # re-seeding path; every center must still own at least one point
        pts = np.array([[0.0, 0.0]] * 20 + [[10.0, 10.0]] * 20)
        res = kmeans(pts, k=3, seed=0)
        assert res.centers.shape == (3, 2)
        assert len(set(res.assignments.tolist())) >= 2

    def test_deterministic(self, rng):
        pts, _ = three_blobs(rng)
        a = kmeans(pts, k=3, seed=5)
        b = kmeans(pts, k=3, seed=5)
        assert np.array_equal(a.centers, b.centers)
        assert np.array_equal(a.assignments, b.assignments)

    def test_validation(self, rng):
        with pytest.raises(ValueError):
            kmeans(rng.standard_normal((3, 2)), k=5)
        with pytest.raises(ValueError):
            kmeans(rng.standard_normal((3, 2)), k=0)


class TestClusterComposition:
    def test_counts_and_fractions(self):
        assignments = np.array([0, 0, 1, 1, 1, 0])
        ids = ["a", "a", "a", "b", "b", "b"]
        rep = cluster_composition(assignments, ids)
        assert rep.counts[(0, "a")] == 2
        assert rep.counts[(0, "b")] == 1
        assert rep.counts[(1, "a")] == 1
        assert rep.counts[(1, "b")] == 2
        assert rep.fractions[(0, "a")] == pytest.approx(2 / 3)
        assert rep.cluster_sizes() == {0: 3, 1: 3}
        assert rep.dataset_ids == ("a", "b")

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            cluster_composition(np.array([0, 1]), ["a"])


class TestTsne:
    def test_deterministic(self, rng):
        x, _ = three_blobs(rng, n_per=20)
        a = tsne(x, perplexity=10.0, seed=4, n_iter=260)
        b = tsne(x, perplexity=10.0, seed=4, n_iter=260)
        assert np.array_equal(a.points, b.points)
        assert a.kl_final == b.kl_final

    def test_kl_decreases(self, rng):
        x, _ = three_blobs(rng, n_per=25)
        proj = tsne(x, perplexity=12.0, seed=0, n_iter=400)
        assert proj.kl_final < proj.kl_initial

    def test_separated_blobs_stay_separated(self, rng):
        x, labels = three_blobs(rng, n_per=25)
        proj = tsne(x, perplexity=12.0, seed=0, n_iter=500)

        def silhouette(y, lab):
            from mergap.kernels import pairwise_sq_dists

            d = np.sqrt(pairwise_sq_dists(y, y))
            vals = []
            for i in range(len(y)):
                same = lab == lab[i]
                same[i] = False
                a = d[i, same].mean()
                b = min(d[i, lab == o].mean() for o in set(lab) if o != lab[i])
                vals.append((b - a) / max(a, b))
            return float(np.mean(vals))

        assert silhouette(proj.points, labels) > 0.5

    def test_centroids_per_dataset(self, rng):
        x, labels = three_blobs(rng, n_per=15)
        ids = [f"ds{v}" for v in labels]
        proj = tsne(x, perplexity=8.0, seed=0, n_iter=260, dataset_ids=ids)
        assert set(proj.centroids) == {"ds0", "ds1", "ds2"}
        np.testing.assert_allclose(
            proj.centroids["ds0"], proj.points[:15].mean(axis=0), atol=1e-12
        )

    def test_points_are_centered(self, rng):
        x, _ = three_blobs(rng, n_per=15)
        proj = tsne(x, perplexity=8.0, seed=0, n_iter=260)
        np.testing.assert_allclose(proj.points.mean(axis=0), 0.0, atol=1e-9)

    def test_perplexity_validation(self, rng):
        x = rng.standard_normal((10, 3))
        with pytest.raises(ValueError, match="perplexity"):
            tsne(x, perplexity=10.0)  # must be < n
        with pytest.raises(ValueError, match="perplexity"):
            tsne(x, perplexity=0.5)


class TestInterCentroidStats:
    def test_two_points_hand_case(self):
        stats = inter_centroid_stats({"a": np.array([0.0, 0.0]), "b": np.array([3.0, 4.0])})
        assert stats.mean == 5.0
        assert stats.variance == 0.0
        assert stats.pair_distances[("a", "b")] == 5.0

    def test_three_points_population_variance(self):
        cents = {
            "a": np.array([0.0, 0.0]),
            "b": np.array([1.0, 0.0]),
            "c": np.array([3.0, 0.0]),
        }
        # pair distances: 1, 3, 2 -> mean 2, population variance 2/3
        stats = inter_centroid_stats(cents)
        assert stats.mean == pytest.approx(2.0)
        assert stats.variance == pytest.approx(2.0 / 3.0)
        assert set(stats.pair_distances) == {("a", "b"), ("a", "c"), ("b", "c")}

    def test_requires_two(self):
        with pytest.raises(ValueError):
            inter_centroid_stats({"a": np.zeros(2)})
