import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contspec import spectral as S
from contspec.angular import ModeIndex, eval_psi, normalization
from contspec.errors import AlphaTableMiss, DomainError, SingularIntegrand, ValidationError

SMALL = S.ErrorGrid(32, 32, 32)


class TestWeight:
    def test_peak_value(self):
        w = S.SpectralWeight.test_weight()
        assert float(w(0.5, 0.3)) == 1.0
        assert float(w(1.5, 0.3)) == pytest.approx(2 ** -1.5, rel=1e-15)

    def test_constrained(self):
        w = S.SpectralWeight("constrained_param", {"A": 2.0, "p": 1.5, "q": 0.5, "beta": 0.4})
        ref = 2.0 * 1.2 ** 1.5 * 0.36 ** 0.5 * math.exp(-0.4 * (1.44 + 0.1296))
        assert float(w(1.2, -0.36)) == pytest.approx(ref, rel=1e-14)

    @pytest.mark.parametrize("form,params,table", [
        ("rational_peak", {"A0": 0.0, "ell0": 0.5, "m0": 0.3, "p": 3.0}, None),
        ("constrained_param", {"A": 1.0, "p": 1.0, "q": 1.0, "beta": 1.0}, None),
        ("constrained_param", {"A": 1.0, "p": 2.0, "q": -1.0, "beta": 1.0}, None),
        ("tabulated", {}, None),
        ("tabulated", {}, ([0.1, 0.2], [0.0], np.zeros((2, 2)))),
        ("gaussian", {}, None),
    ])
    def test_validation(self, form, params, table):
        with pytest.raises(ValidationError):
            S.SpectralWeight(form, params, table)

    def test_interpolated_table(self):
        w = S.SpectralWeight("tabulated", {}, ([0.0, 1.0], [0.0, 1.0], np.array([[0.0, 1.0], [2.0, 3.0]])))
        assert float(w(0.5, 0.5)) == pytest.approx(1.5, rel=1e-15)
        assert float(w(2.0, 0.5)) == 0.0
        assert w.point_masses() == []

    def test_point_masses(self):
        w = S.SpectralWeight.single_mode(1.3, 0.2, 0.5j)
        assert w.point_masses() == [(1.3, 0.2, 0.5j)]
        assert float(w(1.3, 0.2)) == 0.0


class TestMappedRule:
    def test_validation(self):
        for kw in ({"n_nodes": 0}, {"n_nodes": 4, "c": 0.0}, {"n_nodes": 4, "lo": 1.0, "hi": 1.0}):
            with pytest.raises(ValidationError):
                S.MappedQuadConfig(**kw)

    @settings(max_examples=30, deadline=None)
    @given(c=st.floats(1e-3, 3.0), lo=st.floats(-2.0, 1.0), span=st.floats(0.1, 4.0))
    def test_smooth_integral(self, c, lo, span):
        x, w = S.mapped_nodes(S.MappedQuadConfig(48, c, lo, lo + span))
        assert np.all((x >= lo) & (x <= lo + span))
        ref = math.exp(lo + span) - math.exp(lo)
        assert np.sum(w * np.exp(x)) == pytest.approx(ref, rel=1e-10)

    def test_clustering(self):
        x1, _ = S.mapped_nodes(S.MappedQuadConfig(16, 1e-9))
        x2, _ = S.mapped_nodes(S.MappedQuadConfig(16, 2.0))
        # the tanh map pulls nodes towards the interval ends
        assert x2[0] < x1[0] and x2[-1] > x1[-1]

    def test_composite(self):
        x, w = S.quad_points(S.split_rule(6, -0.9, 0.9))
        assert x.size == 12 and np.sum(w * np.abs(x)) == pytest.approx(0.81, rel=1e-14)


class TestCore:
    def test_values(self):
        assert S.core_multiplier(0.05, 0.05) == pytest.approx(0.5)
        assert S.core_multiplier(0.0, 0.05) == 0.0
        with pytest.raises(DomainError):
            S.core_multiplier(-1.0, 0.05)
        with pytest.raises(ValidationError):
            S.RegularizationParams(r_c=0.0)

    def test_regularized_core(self):
        out = S.regularized_core(np.array([2.0, 4.0]), S.RegularizationParams(0.1), np.array([0.1, 0.2]))
        assert out == pytest.approx([1.0, 3.2])


class TestSynthesis:
    def test_single_mode_scalar(self):
        sg = S.SampleGrid((0.3, 0.7), (0.4, 1.2), (0.0, 0.5))
        f = S.synthesize(S.SpectralWeight.single_mode(0.7, 0.3, 2.0), *S.test_rules(4), grid=sg)
        ref = 2 * 0.7 ** -0.3 * eval_psi(ModeIndex(0.7, 0.3), 1.2, 0.5).value
        assert f.values[0, 1, 1, 1] == pytest.approx(ref, rel=1e-13)

    def test_single_mode_vector(self):
        sg = S.SampleGrid((0.7,), (1.2,), (0.5,))
        f = S.synthesize(S.SpectralWeight.single_mode(0.7, 0.3, 2.0), *S.test_rules(4), grid=sg,
                         components="vector")
        e = eval_psi(ModeIndex(0.7, 0.3), 1.2, 0.5)
        ref = 2 * 0.7 ** -0.3 * np.array([e.value, e.dtheta / 0.7, e.dphi_factor / (0.7 * math.sin(1.2))])
        assert np.max(np.abs(f.values[:, 0, 0, 0] - ref)) < 1e-13

    def test_unit_mode_norm(self):
        f = S.synthesize(S.SpectralWeight.single_mode(2.0, 1.0), *S.test_rules(4), grid=SMALL)
        assert f.l2_norm() ** 2 == pytest.approx((1 - 1e-5) / 5, rel=1e-12)

    def test_linearity(self):
        w1 = S.SpectralWeight.test_weight()
        w2 = S.SpectralWeight("rational_peak", {"A0": 3.0, "ell0": 0.5, "m0": 0.3, "p": 3.0})
        a = S.synthesize(w1, *S.test_rules(6), grid=S.ErrorGrid(8, 8, 8))
        b = S.synthesize(w2, *S.test_rules(6), grid=S.ErrorGrid(8, 8, 8))
        assert np.max(np.abs(b.values - 3 * a.values)) < 1e-12 * np.max(np.abs(b.values))

    def test_inadmissible_nodes(self):
        with pytest.raises(ValidationError):
            S.synthesize(S.SpectralWeight.test_weight(), S.MappedQuadConfig(4, 1.0, 0.05, 1.0),
                         S.MappedQuadConfig(4, 1.0, 1.2, 1.8), grid=S.ErrorGrid(4, 4, 4))

    def test_alpha_table_source(self):
        ell, m = np.linspace(0.0, 3.0, 7), np.linspace(-1.0, 1.0, 5)
        table = S.AlphaTable(ell, m, np.repeat((ell - 1.0)[:, None], m.size, axis=1))
        g = S.ErrorGrid(6, 6, 6)
        a = S.synthesize(S.SpectralWeight.test_weight(), *S.test_rules(6), grid=g)
        b = S.synthesize(S.SpectralWeight.test_weight(), *S.test_rules(6), grid=g, alpha_source="eigen_table",
                         alpha_table=table)
        assert np.max(np.abs(a.values - b.values)) < 1e-12 * np.max(np.abs(a.values))
        with pytest.raises(ValidationError):
            S.synthesize(S.SpectralWeight.test_weight(), *S.test_rules(2), grid=g, alpha_source="eigen_table")

    def test_field_grid_validation(self):
        with pytest.raises(ValidationError):
            S.FieldGrid(np.array([0.5]), np.array([1.0]), np.array([0.0]), np.zeros((1, 2, 1, 1)))
        with pytest.raises(ValidationError):
            S.SampleGrid((0.0,), (1.0,), (0.0,)).nodes()

    def test_log_normalization(self):
        assert math.exp(S.log_normalization(0.8, 0.3)) == pytest.approx(normalization(ModeIndex(0.8, 0.3)),
                                                                       rel=1e-13)
        with pytest.raises(DomainError):
            S.log_normalization(-0.6, 0.0)


class TestAlphaTable:
    def test_polynomial_reproduced(self):
        ell, m = np.linspace(0.0, 3.0, 6), np.linspace(-1.0, 1.0, 5)
        vals = (ell[:, None] ** 2) * (1 + m[None, :])
        t = S.AlphaTable(ell, m, vals)
        assert t(1.7, 0.3)[0, 0] == pytest.approx(1.7 ** 2 * 1.3, rel=1e-12)

    def test_miss(self):
        t = S.AlphaTable([0.0, 1.0], [0.0, 1.0], np.zeros((2, 2)))
        with pytest.raises(AlphaTableMiss):
            t(1.5, 0.5)
        with pytest.raises(ValidationError):
            S.AlphaTable([0.0, 1.0], [0.0], np.zeros((2, 2)))


class TestTruncation:
    def test_rows_and_ratios(self):
        rep = S.truncation_error(S.SpectralWeight.test_weight(), [8, 16, 32], grid=SMALL)
        ns = [r[0] for r in rep.rows]
        errs = [r[1] for r in rep.rows]
        assert ns == [8, 16, 32] and errs[0] > errs[1] > errs[2] > 0
        assert set(rep.ratios()) == {8, 16}
        assert rep.as_rows()[-1][2] == ""
        assert not rep.regularized

    def test_decay_exponent(self):
        ns = np.array([10, 20, 40, 80])
        assert S.decay_exponent(ns, 3.0 * ns ** -2.0) == pytest.approx(2.0, rel=1e-12)
        assert S.decay_exponent([10, 20], [1e-3, 0.0]) == math.inf


class TestPlancherel:
    def test_grid_vs_spectral(self):
        g, s = S.plancherel_check(S.SpectralWeight.test_weight(), *S.test_rules(8), grid=S.ErrorGrid(64, 64, 64))
        assert abs(g - s) < 0.01 * s

    def test_sobolev_weight_fn(self):
        ell = np.array([0.5, 1.0])
        m = np.array([0.0])
        a = np.ones((2, 1))
        base = S.sobolev_norm(a, ell, m, [1.0, 1.0], [1.0], 0.0)
        assert base == pytest.approx(math.sqrt(2.0))
        s1 = S.sobolev_norm(a, ell, m, [1.0, 1.0], [1.0], 1.0)
        assert s1 == pytest.approx(math.sqrt(1.75 + 3.0))
        with pytest.raises(ValidationError):
            S.sobolev_norm(np.ones((1, 1)), ell, m, [1.0, 1.0], [1.0])


class TestSingularityQuadrature:
    def test_borderline_power(self):
        # |r^{-1}|² r² = 1
        assert S.singularity_quadrature(lambda r: 1.0 / r, -1.0, 0.8) == pytest.approx(0.8, rel=1e-10)

    @pytest.mark.parametrize("a", [-0.9, -0.3, 0.5])
    def test_routes_agree(self, a):
        ref = 1.0 / (2 * a + 3)
        for route in ("plain", "transformed"):
            v = S.singularity_quadrature(lambda r: r ** a, a, 1.0, route=route)
            assert v == pytest.approx(ref, rel=1e-9)

    def test_divergent(self):
        with pytest.raises(SingularIntegrand):
            S.singularity_quadrature(lambda r: r ** -1.6, -1.6, 1.0)

    def test_domain(self):
        with pytest.raises(DomainError):
            S.singularity_quadrature(lambda r: r, 1.0, 1.0)
        with pytest.raises(ValidationError):
            S.singularity_quadrature(lambda r: r, 0.0, 1.0, route="other")
