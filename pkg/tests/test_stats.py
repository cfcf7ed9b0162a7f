import math

import numpy as np
import pytest
from scipy import stats as sps

from blockwalk.instances import random_block_model
from blockwalk.model import BlockModel
from blockwalk.stats import (
    ExperimentConfig,
    brute_force_partition_distribution,
    calibrate,
    chi_square,
    chi_square_two_sample,
    compare_component_laws,
    compare_encoding_laws,
    component_law_p_value,
    exact_first_jump_distribution,
    exact_partition_distribution,
    exponential_cdf,
    ks_one_sample,
    ks_two_sample,
    mc_component_distribution,
    partition_signature,
    sample_partition_batch,
)


def two_vertex_model(q=0.5):
    return BlockModel(((1.0,), (1.0,)), ((1.0, q), (q, 1.0)))


class TestExactOracle:
    def test_two_vertex_closed_form(self):
        dist = exact_partition_distribution(two_vertex_model())
        together = dist.probs[(((0, 0), (0, 1)),)]
        apart = dist.probs[(((0, 0),), ((0, 1),))]
        assert together == pytest.approx(1.0 - math.exp(-0.5), abs=1e-12)
        assert apart == pytest.approx(math.exp(-0.5), abs=1e-12)

    def test_single_vertex(self):
        dist = exact_partition_distribution(BlockModel(((1.0,),), ((1.0,),)))
        assert dist.probs == {(((0, 0),),): 1.0}

    def test_probabilities_sum_to_one(self, rng):
        for _ in range(10):
            model = random_block_model(rng, max_vertices=5)
            assert exact_partition_distribution(model).total() == pytest.approx(1.0, abs=1e-12)

    def test_matches_brute_force(self, rng):
        for _ in range(10):
            model = random_block_model(rng, max_vertices=5)
            fast = exact_partition_distribution(model)
            slow = brute_force_partition_distribution(model)
            assert set(fast.probs) == set(slow.probs)
            for key, p in fast.probs.items():
                assert p == pytest.approx(slow.probs[key], abs=1e-12)

    def test_too_many_vertices_rejected(self):
        model = BlockModel((tuple(sorted(np.linspace(1, 2, 9), reverse=True)),), ((1.0,),))
        with pytest.raises(ValueError):
            exact_partition_distribution(model)


class TestChiSquare:
    def test_exact_match_gives_unit_p(self):
        observed = {"a": 600, "b": 400}
        expected = {"a": 0.6, "b": 0.4}
        res = chi_square(observed, expected)
        assert res.statistic == 0.0
        assert res.p_value == 1.0

    def test_hand_computed_two_cell(self):
        # (60-50)^2/50 * 2 = 4.0 with one degree of freedom
        res = chi_square({"a": 60, "b": 40}, {"a": 0.5, "b": 0.5})
        assert res.statistic == pytest.approx(4.0, abs=1e-12)
        assert res.dof == 1
        assert res.p_value == pytest.approx(float(sps.chi2.sf(4.0, 1)), abs=1e-12)

    def test_sparse_cells_pooled(self):
        observed = {"a": 950, "b": 40, "c": 6, "d": 4}
        expected = {"a": 0.95, "b": 0.04, "c": 0.007, "d": 0.003}
        res = chi_square(observed, expected)
        assert res.pooled_cells >= 2

    def test_unknown_category_counted(self):
        res = chi_square({"a": 990, "ghost": 10}, {"a": 0.5, "b": 0.5})
        assert res.unknown_mass == 10

    def test_single_cell_rejected(self):
        with pytest.raises(ValueError):
            chi_square({"a": 100}, {"a": 1.0})

    def test_two_sample_identical_counts(self):
        counts = {"a": 500, "b": 500}
        res = chi_square_two_sample(counts, counts)
        assert res.statistic == 0.0
        assert res.p_value == 1.0


class TestKS:
    def test_identical_samples(self):
        a = np.linspace(0.0, 1.0, 200)
        res = ks_two_sample(a, a)
        assert res.statistic == 0.0

    def test_exponential_fit(self):
        rng = np.random.default_rng(5)
        sample = rng.exponential(0.5, size=20_000)
        res = ks_one_sample(sample, exponential_cdf(2.0))
        assert res.p_value > 0.001

    def test_wrong_rate_rejected(self):
        rng = np.random.default_rng(6)
        sample = rng.exponential(0.5, size=20_000)
        res = ks_one_sample(sample, exponential_cdf(3.0))
        assert res.p_value < 1e-6


class TestSamplers:
    def test_batch_partition_law_matches_exact(self):
        model = two_vertex_model()
        parts = sample_partition_batch(model, 50_000, 7)
        together = sum(len(p) == 1 for p in parts)
        p = 1.0 - math.exp(-0.5)
        sigma = math.sqrt(50_000 * p * (1 - p))
        assert abs(together - 50_000 * p) <= 3 * sigma

    def test_deterministic_given_seed(self):
        model = two_vertex_model()
        a = mc_component_distribution(model, (1.0, 1.0), 2000, 3, "graph")
        b = mc_component_distribution(model, (1.0, 1.0), 2000, 3, "graph")
        assert a == b
        c = mc_component_distribution(model, (1.0, 1.0), 2000, 3, "field")
        d = mc_component_distribution(model, (1.0, 1.0), 2000, 3, "field")
        assert c == d

    def test_replication_floor_enforced(self):
        with pytest.raises(ValueError):
            mc_component_distribution(two_vertex_model(), (1.0, 1.0), 10, 0, "graph")

    def test_unknown_sampler_rejected(self):
        with pytest.raises(ValueError):
            mc_component_distribution(two_vertex_model(), (1.0, 1.0), 2000, 0, "exotic")

    def test_near_empty_kernel_gives_singletons(self):
        model = BlockModel(((1.0,), (1.0,)), ((1e-9, 0.0), (0.0, 1e-9)))
        singles = partition_signature(model, (((0, 0),), ((0, 1),)))
        for sampler in ("graph", "field"):
            counts = mc_component_distribution(model, (1.0, 1.0), 2000, 1, sampler)
            assert counts[singles] == 2000


class TestLawComparisons:
    def test_component_laws_agree_at_moderate_n(self):
        cfg = ExperimentConfig(two_vertex_model(), (1.0, 1.0), n_reps=20_000, seed=11)
        res = compare_component_laws(cfg)
        assert res["pass"], res

    def test_encoding_laws_agree_at_moderate_n(self):
        cfg = ExperimentConfig(two_vertex_model(), (1.0, 1.0), n_reps=20_000, seed=13)
        res = compare_encoding_laws(cfg)
        assert res["pass"], res

    def test_exact_first_jump_distribution_two_vertices(self):
        model = two_vertex_model()
        dist = exact_first_jump_distribution(model, (1.0, 1.0))
        assert sum(dist.values()) == pytest.approx(1.0, abs=1e-12)
        # merged component jumps with (R M)_i = M_i + 0.5 M_j
        merged_key = (1.5, 1.5)
        p_merge = 1.0 - math.exp(-0.5)
        assert dist[merged_key] == pytest.approx(p_merge, abs=1e-12)
        # either singleton comes first with probability (1-p)/2
        assert dist[(1.0, 0.5)] == pytest.approx((1 - p_merge) / 2, abs=1e-12)
        assert dist[(0.5, 1.0)] == pytest.approx((1 - p_merge) / 2, abs=1e-12)

    def test_zero_direction_excludes_pure_components(self):
        model = two_vertex_model()
        dist = exact_first_jump_distribution(model, (1.0, 0.0))
        # a lone type-two component can never come first
        assert (0.5, 1.0) not in dist

    def test_config_validation(self):
        with pytest.raises(ValueError):
            ExperimentConfig(two_vertex_model(), (1.0, 1.0), n_reps=10)
        with pytest.raises(ValueError):
            ExperimentConfig(two_vertex_model(), (1.0, 1.0), alpha=2.0)
        with pytest.raises(ValueError):
            ExperimentConfig(two_vertex_model(), (0.0, 0.0))


class TestCalibration:
    def test_null_p_values_reject_at_nominal_rate(self):
        rng = np.random.default_rng(19)
        draws = rng.uniform(size=1000)
        res = calibrate(lambda s: float(draws[s]), 1000, 0.05)
        sigma = math.sqrt(1000 * 0.05 * 0.95)
        assert abs(res.rejections - 50) <= 3 * sigma

    def test_component_law_p_value_is_deterministic(self):
        model = two_vertex_model()
        a = component_law_p_value(model, (1.0, 1.0), 2000, 4)
        b = component_law_p_value(model, (1.0, 1.0), 2000, 4)
        assert a == b

    def test_parallel_matches_sequential(self):
        draws = np.random.default_rng(3).uniform(size=40)

        def p_of(seed):
            return float(draws[seed])

        seq = calibrate(p_of, 40, 0.1, jobs=1)
        assert seq.rejections == sum(d < 0.1 for d in draws)
