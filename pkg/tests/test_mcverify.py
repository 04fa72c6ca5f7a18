import numpy as np
import pytest

from cidim.cid import cid_multi, construct_w_multi, construct_w_pair
from cidim.errors import DimensionMismatch, InfeasibleDims
from cidim.linalg import numeric_rank
from cidim.mcverify import (
    check_alg1_lemmas,
    check_as_relation,
    check_lemma_cond,
    linear_predictor,
    make_structured_instance,
    sample_joint,
    spawn_seeds,
)
from cidim.presets import intro, setup1


class TestSampling:
    def test_reproducible(self):
        a = sample_joint(setup1(), 100, seed=3).samples
        b = sample_joint(setup1(), 100, seed=3).samples
        np.testing.assert_array_equal(a, b)

    def test_empirical_covariance(self):
        j = setup1()
        s = sample_joint(j, 200_000, seed=0).samples
        np.testing.assert_allclose(np.cov(s.T), j.sigma, atol=0.02)

    def test_exact_null_directions(self):
        j = intro()
        s = sample_joint(j, 1000, seed=1)
        # V appears in both blocks
        assert np.max(np.abs(s.block(0)[:, 1] - s.block(1)[:, 1])) < 1e-14

    def test_bad_count(self):
        with pytest.raises(ValueError):
            sample_joint(setup1(), 0)

    def test_spawn_seeds(self):
        assert spawn_seeds(0, 5) == spawn_seeds(0, 5)
        assert len(set(spawn_seeds(0, 50))) == 50
        assert spawn_seeds(0, 3) == spawn_seeds(0, 6)[:3]


class TestRelations:
    def test_shape_mismatch(self):
        b = sample_joint(setup1(), 10, seed=0)
        with pytest.raises(DimensionMismatch):
            check_as_relation(b, np.zeros((1, 8)), np.zeros((2, 8)))

    def test_false_relation_detected(self):
        b = sample_joint(setup1(), 500, seed=0)
        left = np.zeros((1, 8))
        right = np.zeros((1, 8))
        left[0, 3], right[0, 7] = 1.0, 1.0
        assert check_as_relation(b, left, right) > 0.1

    def test_lemma_cond_setup1(self):
        assert check_lemma_cond(setup1(), construct_w_pair(setup1()))

    def test_lemma_cond_needs_complements(self):
        with pytest.raises(DimensionMismatch):
            check_lemma_cond(setup1(), construct_w_multi(setup1()))

    def test_predictor_recovers_z(self):
        inst = make_structured_instance(3, [3, 2, 4], 2, seed=12)
        j = inst.joint
        spec = construct_w_multi(j)
        batch = sample_joint(j, 400, seed=2)
        for i, z in enumerate(spec.trace.z_maps):
            if z.shape[0]:
                pred = linear_predictor(j, z, [k for k in range(j.n) if k != i])
                assert check_as_relation(batch, z, pred) < 1e-8


class TestPlanted:
    @pytest.mark.parametrize("seed", range(10))
    def test_cid_equals_planted(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 5))
        dims = [int(d) for d in rng.integers(1, 7, size=n)]
        s = int(rng.integers(0, min(dims) + 1))
        inst = make_structured_instance(n, dims, min(s, 3), seed)
        assert cid_multi(inst.joint) == inst.true_cid

    def test_private_dims_control_rank(self):
        inst = make_structured_instance(2, [4, 4], 1, seed=0, private_dims=[0, 3])
        assert numeric_rank(inst.joint.marginal(0)) == 1
        assert numeric_rank(inst.joint.marginal(1)) == 4

    def test_infeasible(self):
        with pytest.raises(InfeasibleDims):
            make_structured_instance(2, [2, 3], 3, seed=0)
        with pytest.raises(InfeasibleDims):
            make_structured_instance(3, [2, 3], 1, seed=0)
        with pytest.raises(InfeasibleDims):
            make_structured_instance(2, [2, 3], 1, seed=0, private_dims=[2, 0])

    def test_lemmas(self):
        inst = make_structured_instance(4, [3, 4, 2, 5], 2, seed=21)
        report = check_alg1_lemmas(construct_w_multi(inst.joint).trace, inst.joint)
        assert report.ok
        assert max(report.z_rest_residuals) < 1e-9
