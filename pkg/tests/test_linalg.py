import numpy as np
import pytest
from hypothesis import given, strategies as st

from cidim.errors import DimensionMismatch, NotPSD, NotSymmetric, SpectrumOutOfRange
from cidim.linalg import (
    GaussianJoint,
    Tolerances,
    canonical_spectrum,
    conditional_cov,
    null_space_basis,
    numeric_rank,
    pinv_sqrt,
    row_space_basis,
    validate_covariance,
)
from cidim.presets import intro, setup1

from oracles import random_psd, rank_svd


class TestTolerances:
    def test_defaults(self):
        t = Tolerances()
        assert (t.rank_tol, t.one_tol, t.as_tol, t.solver_tol) == (1e-10, 1e-8, 1e-6, 1e-10)

    @pytest.mark.parametrize("bad", [0.0, 1.0, -1e-3, 2.0])
    def test_rejects_out_of_range(self, bad):
        with pytest.raises(ValueError):
            Tolerances(rank_tol=bad)

    def test_overrides(self):
        assert Tolerances().with_overrides(one_tol=1e-6).one_tol == 1e-6
        with pytest.raises(ValueError):
            Tolerances().with_overrides(bogus=0.1)


class TestValidate:
    def test_identity(self):
        j = validate_covariance(np.eye(4), [2, 2])
        assert j.block_dims == (2, 2)
        np.testing.assert_array_equal(j.sigma, np.eye(4))

    def test_setup1_valid(self):
        j = setup1()
        assert j.sigma.shape == (8, 8)
        assert j.n == 2

    def test_negative_eigenvalue(self):
        m = np.diag([1.0, -0.1])
        with pytest.raises(NotPSD) as exc:
            validate_covariance(m, [1, 1])
        assert exc.value.min_eig == pytest.approx(-0.1)

    def test_asymmetric(self):
        with pytest.raises(NotSymmetric):
            validate_covariance(np.array([[1.0, 0.2], [0.0, 1.0]]), [1, 1])

    def test_tiny_asymmetry_is_averaged(self):
        m = np.array([[1.0, 0.5 + 1e-13], [0.5, 1.0]])
        j = validate_covariance(m, [1, 1])
        assert j.sigma[0, 1] == j.sigma[1, 0]

    @pytest.mark.parametrize("dims", [[2, 1], [4, 0], []])
    def test_dims(self, dims):
        with pytest.raises(DimensionMismatch):
            validate_covariance(np.eye(4), dims)

    def test_non_square(self):
        with pytest.raises(DimensionMismatch):
            validate_covariance(np.ones((2, 3)), [1, 1])

    def test_immutable(self):
        j = validate_covariance(np.eye(2), [1, 1])
        with pytest.raises(ValueError):
            j.sigma[0, 0] = 5.0


class TestRank:
    def test_setup1(self):
        assert numeric_rank(setup1().sigma) == 5

    def test_zero(self):
        assert numeric_rank(np.zeros((3, 3))) == 0

    def test_below_threshold(self):
        assert numeric_rank(np.diag([1.0, 1e-15])) == 1

    def test_relative(self):
        assert numeric_rank(1e-20 * np.eye(3)) == 3


class TestBases:
    def test_intro_null(self):
        b = null_space_basis(intro().sigma)
        assert b.shape == (1, 4)
        v = b[0] / b[0][np.argmax(np.abs(b[0]))]
        np.testing.assert_allclose(np.abs(v), [0, 1, 0, 1], atol=1e-12)
        assert v[1] * v[3] < 0

    def test_identity_null_empty(self):
        assert null_space_basis(np.eye(3)).shape == (0, 3)

    def test_rank_one(self):
        b = null_space_basis(np.ones((2, 2)))
        assert b.shape == (1, 2)
        np.testing.assert_allclose(np.abs(b[0]), [2**-0.5, 2**-0.5], atol=1e-12)
        assert b[0, 0] * b[0, 1] < 0

    def test_row_space_diag(self):
        r = row_space_basis(np.diag([1.0, 0.0]))
        np.testing.assert_allclose(np.abs(r), [[1.0, 0.0]])

    def test_row_space_setup1(self):
        r = row_space_basis(setup1().sigma)
        assert r.shape == (5, 8)
        np.testing.assert_allclose(r @ r.T, np.eye(5), atol=1e-12)
        assert rank_svd(setup1().sigma) == 5

    def test_row_space_zero(self):
        assert row_space_basis(np.zeros((3, 3))).shape == (0, 3)

    @given(st.integers(1, 7), st.integers(0, 7), st.integers(0, 2**32 - 1))
    def test_complementary(self, dim, rank, seed):
        rank = min(rank, dim)
        m = random_psd(np.random.default_rng(seed), dim, rank)
        n, r = null_space_basis(m), row_space_basis(m)
        assert n.shape[0] + r.shape[0] == dim
        if n.size and r.size:
            np.testing.assert_allclose(n @ r.T, 0, atol=1e-10)
        if n.size:
            np.testing.assert_allclose(n @ n.T, np.eye(n.shape[0]), atol=1e-10)
            assert np.max(np.abs(n @ m)) <= 1e-10 * max(np.max(np.abs(m)), 1) * 10


class TestPinvSqrt:
    def test_identity(self):
        np.testing.assert_allclose(pinv_sqrt(np.eye(3)), np.eye(3))

    def test_diag(self):
        np.testing.assert_allclose(pinv_sqrt(np.diag([4.0, 0.0])), np.diag([0.5, 0.0]))

    def test_setup1_projector(self):
        sx = setup1().sigma_x
        s = pinv_sqrt(sx)
        p = s @ sx @ s
        ev = np.linalg.eigvalsh(p)
        assert np.all(np.minimum(np.abs(ev), np.abs(ev - 1)) < 1e-12)

    def test_rejects_indefinite(self):
        with pytest.raises(NotPSD):
            pinv_sqrt(np.diag([1.0, -1.0]))

    @given(st.integers(1, 6), st.integers(0, 6), st.integers(0, 2**32 - 1))
    def test_projector_idempotent(self, dim, rank, seed):
        m = random_psd(np.random.default_rng(seed), dim, min(rank, dim))
        s = pinv_sqrt(m)
        p = s @ m @ s
        np.testing.assert_allclose(p @ p, p, atol=1e-8)
        np.testing.assert_allclose(p, p.T, atol=1e-10)


class TestConditional:
    def test_independent_blocks(self):
        j = validate_covariance(np.diag([2.0, 3.0, 5.0]), [1, 1, 1])
        np.testing.assert_allclose(conditional_cov(j, [0], [1, 2]), [[2.0]])

    def test_perfect_correlation(self):
        j = validate_covariance(np.ones((2, 2)), [1, 1])
        assert conditional_cov(j, [0], [1])[0, 0] == 0.0

    def test_overlap_rejected(self):
        j = setup1()
        with pytest.raises(DimensionMismatch):
            conditional_cov(j, [0], [0])

    def test_psd_output(self):
        c = conditional_cov(setup1(), [0], [1])
        assert np.allclose(c, c.T)
        assert np.linalg.eigvalsh(c)[0] >= 0

    def test_conditional_rank_identity_random(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            dx, dy = rng.integers(1, 6, size=2)
            # shared, private-x, private-y latent parts with random ranks
            s, px, py = rng.integers(0, 3, size=3)
            lx = np.hstack([rng.standard_normal((dx, s)), rng.standard_normal((dx, px)), np.zeros((dx, py))])
            ly = np.hstack([rng.standard_normal((dy, s)), np.zeros((dy, px)), rng.standard_normal((dy, py))])
            l = np.vstack([lx, ly])
            j = validate_covariance(l @ l.T, [dx, dy])
            lhs = numeric_rank(conditional_cov(j, [0], [1]))
            assert lhs == rank_svd(j.sigma) - rank_svd(j.sigma_y)


class TestCanonical:
    def test_bivariate(self):
        j = GaussianJoint.from_blocks([[1.0]], [[1.0]], [[0.5]])
        np.testing.assert_allclose(canonical_spectrum(j).sigma_vals, [0.5])

    def test_scaled_bivariate(self):
        j = GaussianJoint.from_blocks([[4.0]], [[9.0]], [[3.0]])
        np.testing.assert_allclose(canonical_spectrum(j).sigma_vals, [0.5])

    def test_setup1(self):
        np.testing.assert_allclose(canonical_spectrum(setup1()).sigma_vals, [1, 1, 1, 0.3], atol=1e-12)

    def test_uncorrelated(self):
        j = GaussianJoint.from_blocks(np.eye(2), np.eye(3), np.zeros((2, 3)))
        s = canonical_spectrum(j)
        assert s.sigma_vals.size == 2 and np.all(s.sigma_vals == 0)

    def test_factors_orthonormal(self):
        s = canonical_spectrum(setup1())
        np.testing.assert_allclose(s.left_factor.T @ s.left_factor, np.eye(4), atol=1e-10)
        np.testing.assert_allclose(s.right_factor.T @ s.right_factor, np.eye(4), atol=1e-10)

    def test_round_trip(self):
        j = setup1()
        s = canonical_spectrum(j)
        np.testing.assert_allclose(s.cross_covariance(s.sigma_vals), j.sigma_xy, atol=1e-12)

    def test_singular_marginal_length(self):
        sx = np.array([[1.0, 1.0], [1.0, 1.0]])
        j = GaussianJoint.from_blocks(sx, np.eye(2), np.array([[0.5, 0.0], [0.5, 0.0]]))
        s = canonical_spectrum(j)
        assert (s.r_x, s.r_y, s.size) == (1, 2, 1)
        # X_1 = X_2 = Z with unit variance, Cov(Z, Y_1) = 0.5
        np.testing.assert_allclose(s.sigma_vals, [0.5])

    def test_out_of_range(self):
        # not PSD as a joint, bypass validation on purpose
        bad = GaussianJoint((1, 1), np.array([[1.0, 2.0], [2.0, 1.0]]))
        with pytest.raises(SpectrumOutOfRange):
            canonical_spectrum(bad)

    def test_spectrum_in_unit_interval_random(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            dx, dy = rng.integers(1, 5, size=2)
            r = int(rng.integers(1, dx + dy + 1))
            j = validate_covariance(random_psd(rng, dx + dy, r), [dx, dy])
            s = canonical_spectrum(j)
            assert np.all(s.raw_sigma_vals <= 1 + Tolerances().one_tol)
            assert np.all((s.sigma_vals >= 0) & (s.sigma_vals <= 1))
            assert np.all(np.diff(s.sigma_vals) <= 0)
