import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contspec import angular as ang
from contspec import coupling as cp
from contspec.errors import ModelMismatch, NodeFailure, SingularIntegrand, ValidationError

M = ang.ModeIndex
PROJ_FIELDS = ("a_theta", "a_phi", "b_theta", "b_phi", "c_thetaphi")


def psi_handle(idx):
    return lambda theta, phi: ang.psi_grid(idx, theta, phi)[0]


def vsh_basis(lmax):
    out = []
    for ell, m in ang.integer_modes(lmax):
        for fam in ang.VSH_FAMILIES:
            if fam != "radial" and ell == 0:
                continue
            idx = M(ell, m)
            out.append(((fam, idx), lambda t, p, f=fam, i=idx: ang.vsh_grid(f, i, t, p, normalized=True)))
    return out


class TestInnerProduct:
    def test_monopole_norm(self):
        y = psi_handle(M(0, 0))
        assert cp.sphere_inner_product(y, y, cp.default_rule()) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonality(self):
        v = cp.sphere_inner_product(psi_handle(M(1, 0)), psi_handle(M(2, 0)), cp.default_rule())
        assert abs(v) < 1e-12

    def test_continuous_overlap(self):
        f, g = psi_handle(M(0.5, 0.2)), psi_handle(M(0.7, 0.2))
        lo = cp.sphere_inner_product(f, g, cp.default_rule(64, 8))
        hi = cp.sphere_inner_product(f, g, cp.default_rule(128, 8))
        assert abs(hi) > 0.5
        # the south-pole singularity limits Gauss-Legendre to algebraic convergence
        assert abs(lo - hi) < 1e-3 * abs(hi)

    def test_node_failure(self):
        bad = lambda t, p: np.full((t.size, p.size), np.nan)  # noqa: E731
        with pytest.raises(NodeFailure):
            cp.sphere_inner_product(bad, bad, cp.default_rule(8, 4))

    def test_rule_validation(self):
        with pytest.raises(ValidationError):
            cp.QuadratureRule(np.array([0.5, 1.0]), np.array([1.0, 0.5]), 4)


class TestProjections:
    def test_closed_form_reference(self):
        p = cp.projections(M(1, 0))
        assert p.a_theta_closed == pytest.approx(-2 * math.pi, rel=1e-15)
        # the sinθ-measure quadrature of P P' vanishes by parity; the closed form is logged only
        assert abs(p.a_theta) < 1e-14
        assert p.a_theta_discrepancy == pytest.approx(1.0)

    def test_m_zero_structure(self):
        p = cp.projections(M(1.5, 0))
        assert p.b_phi == 0 and p.a_phi == 0 and p.c_thetaphi == 0

    def test_singular_reported(self):
        with pytest.raises(SingularIntegrand):
            cp.projections(M(1.3, 0.2))
        p = cp.projections(M(1.3, 0.2), strict=False)
        assert set(p.singular) == {"b_phi", "c_thetaphi"}
        assert math.isnan(p.b_phi.real)

    @pytest.mark.parametrize("ell,m", [(0.3, 0.1), (0.9, 0.4), (1.3, 0.2), (1.5, 0.5), (3.0, 1.0)])
    def test_refinement_stability(self, ell, m):
        a = cp.projections(M(ell, m), strict=False, level=6)
        b = cp.projections(M(ell, m), strict=False, level=7)
        assert a.singular == b.singular
        for name in PROJ_FIELDS:
            va, vb = getattr(a, name), getattr(b, name)
            if name in a.singular or (name == "b_theta" and "a_theta" in a.singular):
                continue
            assert abs(va - vb) < 1e-8 * max(1.0, abs(vb))

    @pytest.mark.parametrize("ell,m", [(0.9, 0.4), (1.5, 0.5), (2.2, 0.3)])
    def test_m_parity(self, ell, m):
        a = cp.projections(M(ell, m), strict=False)
        b = cp.projections(M(ell, -m), strict=False)
        for name in ("a_phi", "b_phi"):
            if name not in a.singular:
                assert abs(getattr(a, name) + getattr(b, name)) < 1e-10
                assert abs(getattr(a, name).real) < 1e-14


class TestCouplings:
    def test_rtheta_m_zero(self):
        assert cp.coupling_rtheta(M(1.4, 0)) == 0

    def test_rtheta_unit_mode(self):
        # i m N² Φ₀ ∫P² sinθ = i for the (1, 1) harmonic
        assert cp.coupling_rtheta(M(1, 1)) == pytest.approx(1j, abs=1e-14)

    def test_rtheta_linear_in_m(self):
        vals = [cp.coupling_rtheta(M(1.3, m)) / m for m in (0.1, 0.01, 0.001)]
        assert abs(vals[2] - vals[1]) < 0.2 * abs(vals[1] - vals[0])

    def test_thetaphi_order_mismatch(self):
        assert cp.coupling_thetaphi(M(1, 0), M(2, 1)) == 0

    def test_thetaphi_band(self):
        assert cp.coupling_thetaphi(M(1, 0), M(2, 0)) == pytest.approx(math.sqrt(2 / 15), rel=1e-15)
        v = cp.coupling_thetaphi(M(0.6, 0.3), M(1.6, 0.3))
        assert v == pytest.approx(math.sqrt(0.3 * 1.9 / (2.2 * 4.2)), rel=1e-14)

    @settings(max_examples=40, deadline=None)
    @given(ell=st.floats(0.0, 4.0), m=st.floats(-0.9, 0.9))
    def test_ladder_symmetry(self, ell, m):
        if not ell > abs(m) - 1 or ell < abs(m):
            return
        a = cp.coupling_thetaphi(M(ell, m), M(ell + 1, m))
        b = cp.coupling_thetaphi(M(ell + 1, m), M(ell, m))
        assert abs(a - np.conj(b)) < 1e-10


class TestLegendreNorm:
    def test_integer_examples(self):
        assert cp.legendre_norm(M(1, 0))[0] == pytest.approx(2 / 3, rel=1e-15)
        assert cp.legendre_norm(M(2, 1))[0] == pytest.approx(12 / 5, rel=1e-14)
        closed, quad = cp.legendre_norm(M(2, 1))
        assert quad == pytest.approx(closed, rel=1e-12)

    def test_fractional(self):
        closed, quad = cp.legendre_norm(M(0.8, 0.3))
        assert closed == pytest.approx(0.9083329448075868, rel=1e-13)
        # mpmath quadrature of the Ferrers oracle with a u² substitution at the south pole
        assert quad == pytest.approx(0.8140455604137216, rel=1e-12)


class TestGram:
    def test_vsh_identity(self):
        G = cp.gram(vsh_basis(3), cp.default_rule(16, 16))
        assert np.max(np.abs(G.entries - np.eye(G.dim))) < 1e-8
        assert G.hermitian_defect() < 1e-12

    def test_duplicate_singular(self):
        basis = vsh_basis(1)
        G = cp.gram(basis + basis[:1], cp.default_rule(16, 16))
        assert G.min_eigenvalue() < 1e-12

    def test_continuous_positive_definite(self):
        basis = [(M(ell, 0.2), psi_handle(M(ell, 0.2))) for ell in (0.4, 0.5, 0.6)]
        G = cp.gram(basis, cp.default_rule())
        assert G.hermitian_defect() < 1e-12
        np.linalg.cholesky(G.entries)
        assert np.min(np.abs(G.entries)) > 0.1


class TestSingularityExtraction:
    def test_inverse_sqrt(self):
        v = cp.singularity_extracted_integral(lambda t: t ** -0.5, -0.5)
        assert v == pytest.approx(2 * math.sqrt(math.pi), rel=1e-9)

    def test_smooth(self):
        assert cp.singularity_extracted_integral(np.sin, 0.0) == pytest.approx(2.0, abs=1e-12)

    def test_strong_singularity(self):
        # substitution θ = u^10 turns the integrand into 10 cos(u^10)
        ref = float(mp.quad(lambda u: 10 * mp.cos(u ** 10), [0, mp.pi ** 0.1]))
        v = cp.singularity_extracted_integral(lambda t: t ** -0.9 * math.cos(t), -0.9)
        assert v == pytest.approx(ref, rel=1e-9)

    def test_model_mismatch(self):
        with pytest.raises(ModelMismatch):
            cp.singularity_extracted_integral(lambda t: t ** -0.7, -0.3)
