import numpy as np
import pytest

from core.initialization import (
    build_initialization,
    davies_bouldin,
    fit_warm_start,
    initialize,
    random_initialization,
    recursive_partition,
)
from core.srt_engine import route, training_error
from models.dataset import Dataset
from models.settings import InitStrategy, TrainConfig
from models.tree import ModelParams
from tests.conftest import make_dataset


def assert_hierarchy(assignment, n_samples):
    topology = assignment.topology
    np.testing.assert_array_equal(np.sort(assignment.rows_of(1)), np.arange(n_samples))
    for t in topology.branch_nodes:
        left, right = (assignment.rows_of(child) for child in topology.children(t))
        assert np.intersect1d(left, right).size == 0
        np.testing.assert_array_equal(np.sort(np.concatenate([left, right])), np.sort(assignment.rows_of(t)))
    leaves = np.concatenate(assignment.leaf_partition)
    np.testing.assert_array_equal(np.sort(leaves), np.arange(n_samples))


class TestDaviesBouldin:
    def test_two_pairs(self):
        points = np.array([[0.0, 0.0], [0.0, 2.0], [10.0, 0.0], [10.0, 2.0]])
        score = davies_bouldin([np.array([0, 1]), np.array([2, 3])], points).unwrap()
        assert score == pytest.approx(0.2)

    def test_singletons(self):
        points = np.array([[0.0, 1.0], [3.0, 4.0]])
        assert davies_bouldin([np.array([0]), np.array([1])], points).unwrap() == 0.0

    def test_overlap_scores_worse(self):
        points = np.array([[0.0, 0.0], [0.0, 2.0], [10.0, 0.0], [10.0, 2.0]])
        separated = davies_bouldin([np.array([0, 1]), np.array([2, 3])], points).unwrap()
        mixed = davies_bouldin([np.array([0, 2]), np.array([1, 3])], points).unwrap()
        assert mixed > separated

    def test_coincident_centroids(self):
        points = np.array([[0.0, 0.0], [2.0, 0.0], [1.0, 1.0], [1.0, -1.0]])
        score = davies_bouldin([np.array([0, 1]), np.array([2, 3])], points).unwrap()
        assert score == np.inf

    def test_empty_clusters_ignored(self):
        points = np.array([[0.0], [1.0], [5.0]])
        result = davies_bouldin([np.array([0]), np.zeros(0, dtype=int), np.array([1, 2])], points)
        assert result.is_success()

    def test_needs_two_clusters(self):
        result = davies_bouldin([np.arange(4), np.zeros(0, dtype=int)], np.ones((4, 2)))
        assert result.is_failure()


class TestRecursivePartition:
    def test_two_blobs_at_depth_one(self, two_blob_dataset):
        assignment = recursive_partition(two_blob_dataset, 1, seed=0)
        groups = sorted(sorted(rows.tolist()) for rows in assignment.leaf_partition)
        assert groups == [list(range(40)), list(range(40, 80))]

    @pytest.mark.parametrize("seed", range(100))
    def test_hierarchy_invariants(self, seed):
        rng = np.random.default_rng(seed)
        n_samples = int(rng.integers(8, 40))
        depth = int(rng.integers(1, 4))
        dataset = make_dataset(rng, n_samples, int(rng.integers(1, 4)))
        assert_hierarchy(recursive_partition(dataset, depth, seed), n_samples)

    def test_identical_rows_are_degenerate(self):
        dataset = Dataset(X=np.ones((6, 2)), y=np.arange(6.0))
        assignment = recursive_partition(dataset, 2, seed=0)
        assert 1 in assignment.degenerate_nodes
        assert_hierarchy(assignment, 6)

    def test_leaf_labels(self, two_blob_dataset):
        assignment = recursive_partition(two_blob_dataset, 1, seed=0)
        labels = assignment.leaf_labels(80)
        assert set(labels) == {2, 3}
        assert len(set(labels[:40])) == 1


class TestWarmStart:
    def test_empty_leaf_gets_parent_mean(self):
        dataset = Dataset(X=np.ones((6, 2)), y=np.arange(6.0))
        assignment = recursive_partition(dataset, 2, seed=0)
        params = fit_warm_start(dataset, assignment)
        for t in params.topology.leaf_nodes:
            if assignment.rows_of(t).size <= 1:
                parent = assignment.rows_of(t // 2)
                expected = dataset.y[parent].mean() if parent.size else 0.0
                assert params.beta_of(t)[0] == pytest.approx(expected)
                assert np.all(params.beta_of(t)[1:] == 0.0)

    def test_leaves_fit_their_own_lines(self, two_blob_dataset):
        assignment = recursive_partition(two_blob_dataset, 1, seed=0)
        params = fit_warm_start(two_blob_dataset, assignment)
        left_leaf = 2 if 0 in assignment.rows_of(2) else 3
        np.testing.assert_allclose(params.beta_of(left_leaf), [1.0, 2.0, -1.0], atol=1e-8)

    def test_routing_follows_clusters(self, two_blob_dataset):
        assignment = recursive_partition(two_blob_dataset, 1, seed=0)
        params = fit_warm_start(two_blob_dataset, assignment)
        np.testing.assert_array_equal(route(params, two_blob_dataset.X), assignment.leaf_labels(80))


class TestInitialize:
    def test_picks_lowest_score(self, toy_dataset):
        result = initialize(toy_dataset, 2, r=6, seed=3).unwrap()
        assert len(result.repetition_scores) == 6
        assert result.score == min(result.repetition_scores)

    def test_single_repetition(self, toy_dataset):
        result = initialize(toy_dataset, 1, r=1, seed=3).unwrap()
        assert result.repetition_scores == [result.score]

    def test_needs_a_repetition(self, toy_dataset):
        assert initialize(toy_dataset, 1, r=0, seed=3).is_failure()

    def test_reproducible(self, toy_dataset):
        first = initialize(toy_dataset, 2, r=4, seed=9).unwrap()
        second = initialize(toy_dataset, 2, r=4, seed=9).unwrap()
        np.testing.assert_array_equal(first.params.omega, second.params.omega)
        np.testing.assert_array_equal(first.params.beta, second.params.beta)
        for t in first.assignment.topology.leaf_nodes:
            np.testing.assert_array_equal(first.assignment.rows_of(t), second.assignment.rows_of(t))

    def test_custom_scorer(self, toy_dataset):
        calls = []

        def scorer(partition, points):
            calls.append(len(partition))
            return davies_bouldin(partition, points)

        initialize(toy_dataset, 1, r=3, seed=0, scorer=scorer, max_workers=1).unwrap()
        assert calls == [2, 2, 2]


class TestBuildInitialization:
    def test_random_strategy(self, toy_dataset):
        config = TrainConfig(depth=2, init_strategy=InitStrategy.RANDOM)
        result = build_initialization(toy_dataset, config, seed=5).unwrap()
        assert result.assignment is None
        assert np.all(result.params.beta == 0.0)
        np.testing.assert_array_equal(result.params.omega, random_initialization(3, 2, 5).params.omega)

    def test_cluster_strategy(self, toy_dataset):
        result = build_initialization(toy_dataset, TrainConfig(depth=1, r=2)).unwrap()
        assert result.score is not None
        assert result.params.depth == 1


@pytest.mark.slow
class TestSyntheticInitialization:
    def test_routes_to_chosen_leaves(self, synthetic):
        result = initialize(synthetic, 2, r=5, seed=0).unwrap()
        leaves = route(result.params, synthetic.X)
        agreement = np.mean(leaves == result.assignment.leaf_labels(synthetic.n_samples))
        assert agreement >= 0.9

    @pytest.mark.parametrize("seed", range(20))
    def test_warm_start_beats_zero_model(self, synthetic, seed):
        result = initialize(synthetic, 2, r=2, seed=seed).unwrap()
        zero = ModelParams.zeros(2, synthetic.n_features)
        assert training_error(result.params, synthetic) <= training_error(zero, synthetic)
