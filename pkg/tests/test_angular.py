import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contspec import angular as ang
from contspec.errors import IntegerDifferencePole, NearPole, ValidationError

M = ang.ModeIndex


def test_mode_validity():
    with pytest.raises(ValidationError):
        M(0.2, 1.5)
    with pytest.raises(ValidationError):
        M(1.0, 0.0, phi0=7.0)
    assert M(0.2, 0.9).mu == 0.9


class TestPsi:
    def test_equator_zero(self):
        assert abs(ang.eval_psi(M(1, 0), math.pi / 2, 0.0).value) < 1e-15

    def test_monopole(self):
        v = ang.eval_psi(M(0, 0), 0.7, 2.1).value
        assert v == pytest.approx(1 / math.sqrt(4 * math.pi), rel=1e-14)

    def test_fractional_value(self):
        # N * Ferrers(0.7, 0.3; cos 0.5) * e^{0.3i} from mpmath
        v = ang.eval_psi(M(0.7, 0.3), 0.5, 1.0).value
        assert v == pytest.approx(0.30932777656130594 + 0.09568629430155791j, rel=1e-13)

    def test_dphi_factor(self):
        e = ang.eval_psi(M(1.3, 0.4), 1.1, 0.8)
        assert e.dphi_factor == pytest.approx(0.4j * e.value, rel=1e-15)

    def test_sin_weighted(self):
        idx = M(0.9, 0.3)
        plain = ang.eval_psi(idx, 1.2, 0.0).value
        weighted = ang.eval_psi(idx, 1.2, 0.0, "sin_weighted").value
        assert weighted == pytest.approx(plain * math.sin(1.2) ** 0.3, rel=1e-14)

    def test_pole_guard(self):
        with pytest.raises(NearPole):
            ang.eval_psi(M(1, 0), 1e-9, 0.0)

    def test_azimuthal_period(self):
        phi0 = math.pi
        idx = M(1.5, 0.5, phi0)
        a = ang.eval_psi(idx, 0.9, 0.3).value
        b = ang.eval_psi(idx, 0.9, 0.3 + phi0).value
        assert abs(b - np.exp(1j * idx.m * phi0) * a) < 1e-14

    def test_grid_matches_pointwise(self):
        idx = M(1.7, -0.6)
        theta, _, phi = ang.gauss_sphere_grid(6, 5)
        val, dth = ang.psi_grid(idx, theta, phi)
        e = ang.eval_psi(idx, theta[2], phi[3])
        assert val[2, 3] == pytest.approx(e.value, rel=1e-13)
        assert dth[2, 3] == pytest.approx(e.dtheta, rel=1e-12)


class TestWeights:
    @pytest.mark.parametrize("ell,m,ref", [(0, 0, 0.28209479177387814), (1, 0, 0.4886025119029199),
                                           (0.5, 0.2, 0.39648300980461215)])
    def test_normalization(self, ell, m, ref):
        assert ang.normalization(M(ell, m)) == pytest.approx(ref, rel=1e-13)

    def test_spectral_weight(self):
        assert ang.spectral_weight(M(0.5, 0)) == pytest.approx(math.pi, rel=1e-14)
        assert ang.spectral_weight(M(1.5, 1)) == pytest.approx(3.75 * math.pi, rel=1e-13)
        # gamma oracle
        assert ang.spectral_weight(M(0.25, 0.1)) == pytest.approx(6.609276576068051, rel=1e-13)

    def test_weight_pole(self):
        with pytest.raises(IntegerDifferencePole):
            ang.spectral_weight(M(2.0, 1.0))


class TestDual:
    def test_half_integer_degeneration(self):
        idx = M(1.2, 0.7)
        for theta in (0.4, 1.3, 2.6):
            d = ang.eval_dual(idx, theta, 0.5).value
            p = ang.eval_psi(idx, theta, 0.5).value / ang.normalization(idx)
            assert d == pytest.approx(p / math.sqrt(ang.spectral_weight(idx)), rel=1e-13)

    def test_value(self):
        # w^{-1/2}[P + i cot(pi/4) Q](cos 1) from mpmath
        d = ang.eval_dual(M(0.25, 0), 1.0, 0.0).value
        assert d == pytest.approx(0.43646518679961216 + 0.07109711482140799j, rel=1e-12)

    def test_integer_difference_rejected(self):
        with pytest.raises(IntegerDifferencePole):
            ang.eval_dual(M(1.0, 0.0), 1.0, 0.0)


class TestVsh:
    def test_radial_equator(self):
        comps = ang.eval_vsh("radial", M(1, 0), math.pi / 2, 0.0).components
        assert all(abs(c) < 1e-15 for c in comps)

    def test_even_equator(self):
        comps = ang.eval_vsh("even", M(1, 0), math.pi / 2, 0.0).components
        assert comps[0] == 0
        assert comps[1] == pytest.approx(-ang.normalization(M(1, 0)), rel=1e-14)
        assert abs(comps[2]) < 1e-16

    def test_odd_value(self):
        c = math.sqrt(3 / (8 * math.pi)) * np.exp(0.5j)
        comps = ang.eval_vsh("odd", M(1, 1), 1.0, 0.5).components
        assert comps[0] == 0
        assert comps[1] == pytest.approx(1j * c, rel=1e-14)
        assert comps[2] == pytest.approx(-math.cos(1.0) * c, rel=1e-14)

    def test_gram_identity(self):
        theta, w, phi = ang.gauss_sphere_grid(24, 24)
        wq = np.outer(w, np.full(phi.size, 2 * math.pi / phi.size))
        cols, fams = [], []
        for ell, m in ang.integer_modes(4):
            for fam in ang.VSH_FAMILIES:
                if fam != "radial" and ell == 0:
                    continue
                cols.append(ang.vsh_grid(fam, M(ell, m), theta, phi, normalized=True))
                fams.append(fam)
        A = np.stack([c.ravel() for c in cols])
        W = np.tile(wq.ravel(), 3)
        G = (A.conj() * W) @ A.T
        assert np.max(np.abs(G - np.eye(len(cols)))) < 1e-8
        fams = np.array(fams)
        cross = G[fams[:, None] != fams[None, :]]
        assert np.max(np.abs(cross)) < 1e-10

    @pytest.mark.parametrize("ell", [1, 2, 3, 4])
    def test_even_norm(self, ell):
        theta, w, phi = ang.gauss_sphere_grid(24, 24)
        wq = np.outer(w, np.full(phi.size, 2 * math.pi / phi.size))
        y = ang.vsh_grid("even", M(ell, 1), theta, phi)
        assert np.sum(np.abs(y) ** 2 * wq) == pytest.approx(ell * (ell + 1), rel=1e-8)


class TestDecompose:
    def setup_method(self):
        self.theta, self.w, self.phi = ang.gauss_sphere_grid(16, 16)

    def test_single_mode(self):
        y = ang.vsh_grid("radial", M(2, 1), self.theta, self.phi, normalized=True)
        rows, err = ang.vsh_decompose(y, self.theta, self.w, self.phi, 3)
        for fam, ell, m, c in rows:
            target = 1.0 if (fam, ell, m) == ("radial", 2, 1) else 0.0
            assert abs(c - target) < 1e-10
        assert err < 1e-10

    def test_zero_field(self):
        rows, _ = ang.vsh_decompose(np.zeros((3, 16, 16)), self.theta, self.w, self.phi, 3)
        assert all(c == 0 for *_, c in rows)

    def test_three_mode_round_trip(self):
        planted = {("even", 1, -1): 0.3 - 0.2j, ("odd", 3, 2): 1.1, ("radial", 0, 0): -0.7j}
        field = sum(c * ang.vsh_grid(f, M(l_, m_), self.theta, self.phi, normalized=True)
                    for (f, l_, m_), c in planted.items())
        rows, err = ang.vsh_decompose(field, self.theta, self.w, self.phi, 4)
        for fam, ell, m, c in rows:
            assert abs(c - planted.get((fam, ell, m), 0.0)) < 1e-9
        assert err < 1e-9

    def test_grid_too_coarse(self):
        from contspec.errors import GridTooCoarse
        theta, w, phi = ang.gauss_sphere_grid(3, 8)
        with pytest.raises(GridTooCoarse):
            ang.vsh_decompose(np.zeros((3, 3, 8)), theta, w, phi, 4)


class TestPoleScaling:
    @pytest.mark.parametrize("ell,m,ref,tol", [(1, 1, 1.0, 0.01), (2, 2, 2.0, 0.01), (0.8, 0.4, 0.4, 0.02)])
    def test_north(self, ell, m, ref, tol):
        assert abs(ang.pole_scaling_exponent(M(ell, m)) - ref) < tol

    def test_zero_order_rejected(self):
        with pytest.raises(ValidationError):
            ang.pole_scaling_exponent(M(1.0, 0.0))


class TestEllS:
    def test_ell_one(self):
        s = ang.ell_to_s(1.0).s
        assert s == pytest.approx(0.5 + 1j * math.sqrt(7) / 2, rel=1e-14)
        assert s.imag >= 0

    def test_s_one(self):
        assert ang.s_to_ell(1.0) == pytest.approx(0.0, abs=1e-15)

    def test_half(self):
        s = ang.ell_to_s(0.5).s
        assert s * (1 - s) == pytest.approx(0.75, rel=1e-14)
        assert ang.s_to_ell(s) == pytest.approx(0.5, abs=1e-12)

    @settings(max_examples=80, deadline=None)
    @given(ell=st.floats(-0.4, 5.0))
    def test_round_trip(self, ell):
        assert abs(ang.s_to_ell(ang.ell_to_s(ell).s) - ell) < 1e-12


@settings(max_examples=30, deadline=None)
@given(ell=st.floats(0.05, 3.0), m=st.floats(-0.95, 0.95), theta=st.floats(0.1, 3.0))
def test_psi_against_mpmath(ell, m, theta):
    mu = abs(m)
    norm = mp.sqrt((2 * ell + 1) / (4 * mp.pi) * mp.gamma(ell - mu + 1) / mp.gamma(ell + mu + 1))
    ref = norm * mp.gamma(ell + mu + 1) / mp.gamma(ell - mu + 1) * mp.legenp(ell, -mu, mp.cos(theta), type=2)
    got = ang.eval_psi(M(ell, m), theta, 0.0).value
    assert abs(got - float(ref)) <= 1e-10 * max(1.0, abs(float(ref)))
