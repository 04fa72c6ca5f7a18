import math

import numpy as np
import pytest

from cidim.errors import ConsistencyError, InfeasibleEpsilon
from cidim.linalg import GaussianJoint, Tolerances, canonical_spectrum
from cidim.presets import intro, setup1, setup2
from cidim.wyner import (
    make_sequence_member,
    seq_ratio,
    singularity_report,
    wyner_bits,
    wyner_gaussian,
)

from oracles import wyner_closed


def _bivariate(r):
    return GaussianJoint.from_blocks([[1.0]], [[1.0]], [[r]])


class TestClosedForm:
    @pytest.mark.parametrize("r", [0.0, 0.1, 0.3, 0.5, 0.9, 0.999999])
    def test_bivariate(self, r):
        w = wyner_gaussian(_bivariate(r))
        assert not w.infinite
        assert w.bits == pytest.approx(wyner_closed([r]), rel=1e-12, abs=1e-15)

    def test_half(self):
        assert wyner_bits([0.5]) == pytest.approx(0.5 * math.log2(3.0), rel=1e-14)

    def test_empty_and_zero(self):
        assert wyner_bits([]) == 0.0
        assert wyner_bits([0.0, 0.0]) == 0.0

    def test_unit_is_infinite(self):
        assert wyner_bits([0.2, 1.0]) == math.inf

    def test_setup2_d0(self):
        w = wyner_gaussian(setup2(0))
        assert w.bits == pytest.approx(7 * 0.5 * math.log2(3.0), rel=1e-12)

    def test_scale_invariant(self):
        j = GaussianJoint.from_blocks([[4.0]], [[0.25]], [[0.5]])
        assert wyner_gaussian(j).bits == pytest.approx(wyner_closed([0.5]), rel=1e-12)

    def test_monotone_in_correlation(self):
        vals = [wyner_gaussian(_bivariate(r)).bits for r in np.linspace(0, 0.99, 30)]
        assert np.all(np.diff(vals) > 0)


class TestSingular:
    def test_setup1(self):
        w = wyner_gaussian(setup1())
        assert w.infinite and w.bits is None and w.unit_count == 3
        assert w.as_float() == math.inf
        assert singularity_report(setup1()) == (True, 3)

    def test_intro(self):
        assert singularity_report(intro()) == (True, 1)

    def test_nonsingular(self):
        assert singularity_report(_bivariate(0.5)) == (False, 0)

    def test_inconsistent_tolerances(self):
        # correlation 1 - 1e-7 counts as 1 under a loose one_tol but the
        # joint still has full rank
        j = _bivariate(1 - 1e-7)
        with pytest.raises(ConsistencyError):
            singularity_report(j, Tolerances(one_tol=1e-6))


class TestSequence:
    def test_member_spectrum(self):
        j = setup1()
        m = make_sequence_member(j, 1e-3, "min")
        np.testing.assert_allclose(m.rho, [1 - 1e-3] * 3 + [0.3 - 1e-3])
        np.testing.assert_allclose(canonical_spectrum(m.perturbed_joint).sigma_vals, m.rho, atol=1e-10)

    def test_marginals_preserved(self):
        j = setup1()
        m = make_sequence_member(j, 1e-4, "max")
        np.testing.assert_array_equal(m.perturbed_joint.sigma_x, j.sigma_x)
        np.testing.assert_array_equal(m.perturbed_joint.sigma_y, j.sigma_y)

    def test_max_pattern(self):
        m = make_sequence_member(setup1(), 1e-3, "max")
        np.testing.assert_allclose(m.rho, [1 - 1e-3] * 3 + [0.3 + 1e-3])
        assert list(m.sign_pattern) == [-1, -1, -1, 1]

    def test_explicit_signs_clamped(self):
        m = make_sequence_member(setup1(), 1e-3, [1, 1, 1, -1])
        assert list(m.sign_pattern) == [-1, -1, -1, -1]

    @pytest.mark.parametrize("eps", [1e-3, 1e-4, 1e-6])
    def test_ratio_oracle(self, eps):
        expect = wyner_closed([1 - eps] * 3 + [0.3 - eps]) / (0.5 * math.log2(1 / eps))
        assert seq_ratio(setup1(), eps, "min") == pytest.approx(expect, rel=1e-8)

    @pytest.mark.parametrize("eps", [1e-3, 1e-4, 1e-6])
    def test_min_below_max(self, eps):
        assert seq_ratio(setup1(), eps, "min") <= seq_ratio(setup1(), eps, "max")

    def test_infeasible_eps(self):
        with pytest.raises(InfeasibleEpsilon):
            make_sequence_member(setup1(), 0.9)

    @pytest.mark.parametrize("eps", [0.0, 1.0, 1e-9])
    def test_eps_range(self, eps):
        with pytest.raises(InfeasibleEpsilon):
            make_sequence_member(setup1(), eps)

    def test_bad_pattern(self):
        with pytest.raises(ValueError):
            make_sequence_member(setup1(), 1e-3, "sideways")
        with pytest.raises(ValueError):
            make_sequence_member(setup1(), 1e-3, [1, 1])
