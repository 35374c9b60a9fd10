import numpy as np

from core.synthetic import CLUSTER_COEFFICIENTS, gen_synthetic


class TestGenSynthetic:
    def test_shape_and_labels(self, synthetic):
        assert synthetic.X.shape == (1500, 3)
        labels, counts = np.unique(synthetic.labels, return_counts=True)
        np.testing.assert_array_equal(labels, [0, 1, 2, 3])
        np.testing.assert_array_equal(counts, [375] * 4)

    def test_noiseless_coefficients_recovered(self):
        dataset = gen_synthetic(3, noise_sd=0.0)
        for cluster, expected in enumerate(CLUSTER_COEFFICIENTS):
            rows = dataset.labels == cluster
            solution, *_ = np.linalg.lstsq(dataset.X[rows], dataset.y[rows], rcond=None)
            np.testing.assert_allclose(solution, expected, atol=1e-6)

    def test_noise_level(self, synthetic):
        residuals = synthetic.y - np.einsum(
            "ij,ij->i", synthetic.X, CLUSTER_COEFFICIENTS[synthetic.labels]
        )
        assert abs(residuals.std() - 0.1) < 0.01

    def test_same_seed_same_data(self):
        first, second = gen_synthetic(11), gen_synthetic(11)
        np.testing.assert_array_equal(first.X, second.X)
        np.testing.assert_array_equal(first.y, second.y)

    def test_seeds_differ(self):
        assert not np.array_equal(gen_synthetic(1).X, gen_synthetic(2).X)

    def test_clusters_stay_near_unit_cube(self, synthetic):
        assert synthetic.X.min() > -0.2
        assert synthetic.X.max() < 1.2
