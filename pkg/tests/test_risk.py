import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from biasamp import fixed_point as fp
from biasamp import risk
from biasamp.spectra import (JointSpectrum, ScalingRegime, make_diatomic,
                             make_isotropic, make_power_law)


def random_spectrum(seed, d=40, with_delta=True):
    rng = np.random.default_rng(seed)
    delta = rng.uniform(0.0, 1.0, d) if with_delta else np.zeros(d)
    return JointSpectrum(d, rng.uniform(0.2, 2.5, d), rng.uniform(0.1, 2.0, d),
                         rng.uniform(0.3, 2.0, d), delta)


class TestHFunctionals:
    def setup_method(self):
        self.spec = random_spectrum(2)
        self.reg = ScalingRegime.from_rates(0.5, 0.5, 0.75)
        self.lam = 0.01
        self.consts = fp.solve_rp_joint(self.spec, self.reg, self.lam,
                                        b=self.spec.sigma1)

    def test_zero_left_argument(self):
        zero = np.zeros(self.spec.d)
        for k in (1, 2, 3, 4):
            assert risk.h_joint(k, 1, zero, self.spec.sigma1, self.consts,
                                self.spec, self.reg, self.lam) == 0.0

    def test_first_functional_vanishes_at_large_penalty(self):
        lam = 1e9
        consts = fp.solve_rp_joint(self.spec, self.reg, lam, b=self.spec.sigma1)
        val = risk.h_joint(1, 1, np.ones(self.spec.d), None, consts, self.spec,
                           self.reg, lam)
        assert abs(val) < 1e-8

    def test_group_symmetry(self):
        spec = make_isotropic(8, 1.3, 1.3, 1.0, 0.0)
        reg = ScalingRegime.from_rates(0.5, 0.4, 0.8)
        consts = fp.solve_rp_joint(spec, reg, 0.05, b=spec.sigma1)
        ones = np.ones(8)
        for k in (1, 2, 3, 4):
            h1 = risk.h_joint(k, 1, ones, spec.sigma1, consts, spec, reg, 0.05)
            h2 = risk.h_joint(k, 2, ones, spec.sigma1, consts, spec, reg, 0.05)
            assert h1 == pytest.approx(h2, rel=1e-12, abs=1e-15)

    def test_mismatched_target_rejected(self):
        with pytest.raises(ValueError, match="target spectrum"):
            risk.h_joint(2, 1, np.ones(self.spec.d), self.spec.sigma2,
                         self.consts, self.spec, self.reg, self.lam)


class TestRPJointRisk:
    def test_fully_symmetric_groups_have_equal_risks(self):
        spec = make_isotropic(6, 1.0, 1.0, 1.5, 0.0)
        reg = ScalingRegime.from_rates(0.5, 0.5, 0.75)
        r1, r2 = risk.rp_joint_risks(spec, reg, 1e-6, (1.0, 1.0))
        assert r1.bias == pytest.approx(r2.bias, abs=1e-13)
        assert r1.variance == pytest.approx(r2.variance, abs=1e-13)

    def test_dominant_group_matches_separate_model(self):
        # Convergence in the group proportion is absolute (O(p2) with O(1)
        # coefficients), so components are compared against the total risk.
        spec = random_spectrum(4)
        p1 = 0.999
        phi_1, psi_1 = 0.5, 1.5
        reg = ScalingRegime.from_rates(p1, phi_1 * p1, psi_1 * p1)
        lam = 1e-3
        joint = risk.rp_joint_risk(spec, reg, lam, (1.0, 1.0), 1)
        sep = risk.rp_separate_risk(spec, reg, lam, 1.0, 1)
        assert abs(joint.bias - sep.bias) <= 0.01 * sep.total
        assert abs(joint.variance - sep.variance) <= 0.01 * sep.total

    def test_dominant_group_limit_tightens_with_proportion(self):
        spec = random_spectrum(5)
        lam = 0.02
        for p1, tol in ((0.999, 0.01), (0.9999, 0.001)):
            reg = ScalingRegime.from_rates(p1, 0.6 * p1, 0.9 * p1)
            joint = risk.rp_joint_risk(spec, reg, lam, (1.0, 1.0), 1)
            sep = risk.rp_separate_risk(spec, reg, lam, 1.0, 1)
            assert abs(joint.bias - sep.bias) <= tol * sep.total
            assert abs(joint.variance - sep.variance) <= tol * sep.total

    def test_separate_gap_peaks_at_per_group_interpolation(self):
        # Fig-1-style spectrum at feature rate 0.75: the separate-model gap
        # is largest where each group's parameter count matches its samples.
        spec = make_isotropic(12, 2.0, 1.0, 2.0, 1.0)
        psis = [0.125 * 2 ** (k / 2) for k in range(13)]
        edds = []
        for psi in psis:
            reg = ScalingRegime.from_rates(0.5, 0.75, psi)
            th = risk.theory_risks(spec, reg, risk.FAMILY_RP, (1.0, 1.0),
                                   1e-6, (1e-6, 1e-6))
            edds.append(th.gaps.edd)
        assert psis[int(np.argmax(edds))] == pytest.approx(0.5)


class TestRPSeparateRisk:
    def test_unregularized_isotropic_variance(self):
        spec = make_isotropic(5, 1.0, 1.0, 1.0, 0.0)
        # psi_s = 0.5, gamma = 2 -> phi_s = 0.25: V = phi_s/(1-phi_s) = 1/3, B = 0
        reg = ScalingRegime.from_rates(0.5, 0.125, 0.25)
        dec = risk.rp_separate_risk(spec, reg, 1e-8, 1.0, 1)
        assert dec.variance == pytest.approx(1.0 / 3.0, rel=1e-4)
        assert dec.bias == pytest.approx(0.0, abs=1e-6)

    def test_large_penalty_returns_null_model(self):
        spec = random_spectrum(6)
        reg = ScalingRegime.from_rates(0.5, 0.5, 0.75)
        dec = risk.rp_separate_risk(spec, reg, 1e9, 1.0, 2)
        assert dec.variance == pytest.approx(0.0, abs=1e-8)
        null_risk = float(np.mean(spec.theta_s(2) * spec.sigma2))
        assert dec.bias == pytest.approx(null_risk, rel=1e-6)

    @pytest.mark.parametrize("psi_s,gamma", [(0.5, 0.5), (0.5, 2.0), (1.5, 1.25)])
    def test_matches_zero_penalty_closed_form(self, psi_s, gamma):
        spec = random_spectrum(8)
        phi_s = psi_s / gamma
        reg = ScalingRegime.from_rates(0.5, phi_s * 0.5, psi_s * 0.5)
        closed = risk.rp_separate_risk_unregularized(spec, reg, 1.0, 1)
        general = risk.rp_separate_risk(spec, reg, 1e-8, 1.0, 1)
        assert general.total == pytest.approx(closed.total, rel=1e-3)


class TestClassicalJointRisk:
    def test_no_weight_shift_kills_shift_bias_terms(self):
        # With delta = 0 the only bias left is the shrinkage term, which
        # vanishes with the penalty.
        spec = random_spectrum(10, with_delta=False)
        reg = ScalingRegime(p1=0.4, phi=0.5, gamma=1.0)
        dec = risk.classical_joint_risk(spec, reg, 1e-9, (1.0, 1.0), 2)
        assert dec.bias == pytest.approx(0.0, abs=1e-6)

    def test_dominant_group_variance_formula(self):
        spec = random_spectrum(12)
        p1, phi, lam = 0.001, 0.4, 0.05
        reg = ScalingRegime(p1=p1, phi=phi, gamma=1.0)
        dec = risk.classical_joint_risk(spec, reg, lam, (1.0, 1.0), 2)
        from biasamp.spectra import dof
        phi_2 = phi / (1 - p1)
        kappa = fp.solve_kappa(spec.sigma2, phi_2, lam)
        df2 = dof(spec.sigma2, 2, 2, kappa)
        expected = phi_2 * df2 / (1.0 - phi_2 * df2)
        assert dec.variance == pytest.approx(expected, rel=5e-3)

    def test_matches_separate_in_dominant_limit(self):
        spec = random_spectrum(14)
        p1, phi_1, lam = 0.9999, 0.7, 0.01
        reg = ScalingRegime(p1=p1, phi=phi_1 * p1, gamma=1.0)
        joint = risk.classical_joint_risk(spec, reg, lam, (1.0, 1.0), 1)
        sep = risk.classical_separate_risk(spec, reg.phi_s(1), lam, 1.0, 1)
        assert joint.total == pytest.approx(sep.total, rel=1e-3)


class TestClassicalSeparateRisk:
    @pytest.mark.parametrize("phi_s,expected", [(0.5, 1.0), (0.25, 1.0 / 3.0)])
    def test_unregularized_isotropic_variance(self, phi_s, expected):
        spec = make_isotropic(6, 1.0, 1.0, 1.0, 0.0)
        dec = risk.classical_separate_risk(spec, phi_s, 0.0, 1.0, 1)
        assert dec.variance == pytest.approx(expected, rel=1e-12)
        assert dec.bias == 0.0

    def test_large_penalty_returns_null_model(self):
        spec = random_spectrum(16)
        dec = risk.classical_separate_risk(spec, 0.5, 1e9, 1.0, 2)
        assert dec.variance == pytest.approx(0.0, abs=1e-8)
        assert dec.bias == pytest.approx(float(np.mean(spec.theta_s(2) * spec.sigma2)),
                                         rel=1e-6)


class TestPowerLawLimits:
    def test_ratio_two(self):
        odd, edd, add = risk.power_law_limits(2.0, 0.2, 1.0)
        assert add == pytest.approx(2.0)
        assert odd == pytest.approx(2 * 0.2 * 2.0 / 0.6)

    def test_ratio_half(self):
        assert risk.power_law_limits(0.5, 0.2, 1.0)[2] == pytest.approx(1.0)

    def test_small_ratio_tends_to_zero(self):
        assert risk.power_law_limits(1e-9, 0.2, 1.0)[2] == pytest.approx(0.0, abs=1e-8)

    def test_unit_ratio_is_singular(self):
        odd, edd, add = risk.power_law_limits(1.0, 0.2, 1.0)
        assert edd == 0.0 and math.isinf(add)

    def test_feature_rate_domain(self):
        with pytest.raises(ValueError):
            risk.power_law_limits(2.0, 0.5, 1.0)


class TestMetrics:
    def test_symmetric_case_is_undefined(self):
        m = risk.metrics(1.0, 1.0, 2.0, 2.0)
        assert m.odd == 0.0 and m.edd == 0.0 and m.add is None

    def test_arithmetic(self):
        m = risk.metrics(1.0, 2.0, 1.0, 1.5)
        assert (m.odd, m.edd, m.add) == (1.0, 0.5, 2.0)
        assert m.signed_odd == 1.0 and m.signed_edd == 0.5

    def test_ratio_identity(self):
        m = risk.metrics(0.3, 1.1, 0.9, 0.2)
        assert m.add * m.edd == pytest.approx(m.odd, rel=1e-15)

    def test_accepts_decompositions(self):
        spec = make_isotropic(4, 1.0, 1.0, 1.0, 0.0)
        reg = ScalingRegime.from_rates(0.5, 0.25, 0.5)
        th = risk.theory_risks(spec, reg, risk.FAMILY_RP, (1.0, 1.0), 0.1, (0.1, 0.1))
        assert th.gaps.odd == pytest.approx(
            abs(th.r2_joint.total - th.r1_joint.total), abs=1e-15)

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            risk.metrics(1.0, math.inf, 1.0, 2.0)


class TestInvariants:
    @given(seed=st.integers(0, 5000), phi=st.floats(0.15, 2.0),
           gamma=st.floats(0.3, 2.5), lam=st.floats(1e-5, 5.0),
           p1=st.floats(0.15, 0.85))
    @settings(max_examples=20, deadline=None)
    def test_nonnegative_decompositions(self, seed, phi, gamma, lam, p1):
        spec = random_spectrum(seed, d=16)
        reg = ScalingRegime.from_rates(p1, phi, phi * gamma)
        for family in (risk.FAMILY_RP, risk.FAMILY_CLASSICAL):
            th = risk.theory_risks(spec, reg, family, (0.7, 1.3), lam, (lam, lam))
            for dec in (th.r1_joint, th.r2_joint, th.r1_sep, th.r2_sep):
                assert dec.bias >= 0.0
                assert dec.variance >= 0.0

    @given(seed=st.integers(0, 5000), phi=st.floats(0.2, 1.5),
           gamma=st.floats(0.4, 2.0), lam=st.floats(1e-4, 1.0))
    @settings(max_examples=15, deadline=None)
    def test_group_swap_equivariance(self, seed, phi, gamma, lam):
        # Needs a zero weight shift: group 2's weight covariance includes the
        # shift, so swapping groups is only symmetric when the shift is zero.
        rng = np.random.default_rng(seed)
        d = 12
        s1, s2 = rng.uniform(0.2, 2.0, d), rng.uniform(0.2, 2.0, d)
        theta = rng.uniform(0.3, 1.5, d)
        spec = JointSpectrum(d, s1, s2, theta, np.zeros(d))
        swapped = JointSpectrum(d, s2, s1, theta, np.zeros(d))
        p1 = 0.35
        reg = ScalingRegime.from_rates(p1, phi, phi * gamma)
        reg_sw = ScalingRegime.from_rates(1 - p1, phi, phi * gamma)
        sig = (0.6, 1.4)
        sig_sw = (1.4, 0.6)
        for family in (risk.FAMILY_RP, risk.FAMILY_CLASSICAL):
            th = risk.theory_risks(spec, reg, family, sig, lam, (lam, lam))
            tw = risk.theory_risks(swapped, reg_sw, family, sig_sw, lam,
                                   (lam, lam))
            assert th.r1_joint.total == pytest.approx(tw.r2_joint.total, rel=1e-9)
            assert th.r2_joint.total == pytest.approx(tw.r1_joint.total, rel=1e-9)
            assert th.r1_sep.total == pytest.approx(tw.r2_sep.total, rel=1e-9)
            assert th.r2_sep.total == pytest.approx(tw.r1_sep.total, rel=1e-9)

    def test_clamp_rejects_large_negative(self):
        with pytest.raises(ValueError):
            risk.RiskDecomposition(bias=-1e-3, variance=1.0, group=1,
                                   mode="joint", family="classical")

    def test_clamp_accepts_tiny_negative(self):
        dec = risk.RiskDecomposition(bias=-1e-12, variance=1.0, group=1,
                                     mode="joint", family="classical")
        assert dec.bias == 0.0
