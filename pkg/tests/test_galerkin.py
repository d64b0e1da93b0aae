import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contspec import galerkin as G
from contspec.angular import ModeIndex, psi_grid
from contspec.errors import DomainError, ValidationError

M = ModeIndex


class TestSphereModes:
    @pytest.mark.parametrize("ell,m", [(0, 0), (2, 0), (3, 2), (1.5, 0.5), (2.3, 0.3)])
    def test_exact_eigenvalue(self, ell, m):
        res = G.mode_eigenvalue(M(ell, m), 8)
        assert res.lam.real == pytest.approx(ell * (ell + 1), rel=1e-12, abs=1e-12)
        assert res.alpha.real == pytest.approx(ell, abs=1e-12)
        assert res.residual < 1e-10

    def test_constant_potential_shift(self):
        res = G.mode_eigenvalue(M(2, 1), 8, potential=lambda t: np.full_like(t, 0.75))
        assert res.lam.real == pytest.approx(6.75, rel=1e-12)

    def test_higher_spectrum(self):
        system, k, dom = G.mode_system(M(0.0, 0.0), 64)
        assert k == 0 and dom["kind"] == "sphere"
        vals = sorted(r.lam.real for r in G.solve_gevp(system, 6, 30.0))
        assert vals == pytest.approx([6.0, 12.0, 20.0, 30.0, 42.0, 56.0], rel=1e-11)

    def test_dimension_too_small(self):
        with pytest.raises(ValidationError):
            G.mode_eigenvalue(M(4, 0), 3)

    def test_exact_regime(self):
        rep = G.convergence_study(M(2, 0), [8, 16, 32])
        assert rep.regime == "exact" and rep.domain == "sphere"


class TestCapModes:
    def test_nodal_angle(self):
        theta0 = G.first_nodal_angle(M(0.5, 0.1))
        assert theta0 == pytest.approx(2.422165984902148, abs=1e-12)
        assert abs(psi_grid(M(0.5, 0.1), np.array([theta0]), np.array([0.0]))[0][0, 0]) < 1e-12

    def test_no_nodal_line(self):
        with pytest.raises(DomainError):
            G.first_nodal_angle(M(0.3, 0.6))

    def test_cap_eigenvalue_bracket(self):
        # Ritz values bound the cap ground state ell(ell+1) from above
        lam = G.mode_eigenvalue(M(0.5, 0.1), 256).lam.real
        assert 0.75 < lam < 0.9

    def test_monotone_from_above(self):
        vals = [G.mode_eigenvalue(M(0.5, 0.1), n).lam.real for n in (16, 32, 64)]
        assert vals[0] > vals[1] > vals[2] > 0.75

    def test_slow_regime(self):
        rep = G.convergence_study(M(0.5, 0.1), [64, 128, 256])
        ratios = [r for *_, r in rep.rows if r is not None]
        assert rep.domain == "cap"
        assert all(G.SLOW_BAND[0] <= r <= G.SLOW_BAND[1] for r in ratios)
        assert rep.regime == "slow"


class TestStudyValidation:
    def test_increasing(self):
        with pytest.raises(ValidationError):
            G.convergence_study(M(2, 0), [16, 8])

    def test_nonpositive(self):
        with pytest.raises(ValidationError):
            G.mode_system(M(2, 0), 0)

    @pytest.mark.parametrize("ratios,deltas,regime", [
        ([4.0, 3.9], [1e-3, 2.5e-4], "quadratic"),
        ([1.3, 1.4], [1e-2, 8e-3], "slow"),
        ([4.0, 1.3], [1e-2, 2e-3], "mixed"),
        ([], [1e-3], "undetermined"),
        ([5.0], [1e-13, 1e-14], "exact"),
    ])
    def test_classify(self, ratios, deltas, regime):
        assert G.classify(ratios, deltas) == regime


class TestBasisAssembly:
    def test_rejected_labels(self):
        b = G.build_basis([0.05, 1.0], [-1.5, 0.0], ["scalar"])
        assert ("scalar", 0.05, -1.5) in b.rejected
        with pytest.raises(ValidationError):
            G.build_basis([0.05], [-1.5], strict=True)
        with pytest.raises(ValidationError):
            G.build_basis([1.0], [0.0], ["bogus"])

    def test_vsh_spectrum(self):
        b = G.build_basis([1, 2, 3], [-1, 0, 1], ["scalar", "even", "odd"])
        s = G.assemble(G.AngularOperatorSpec(), b)
        assert s.dim == 27 and set(s.sizes) == {"r", "theta", "phi"}
        # vector handles are unnormalized, with squared norm ell(ell+1)
        norms = np.array([1.0 if f == "scalar" else i.ell * (i.ell + 1) for f, i in s.labels])
        assert np.max(np.abs(s.mass() - np.diag(norms))) < 1e-8
        vals = sorted(r.lam.real for r in G.solve_gevp(s, 27, 0.0))
        expect = sorted(ell * (ell + 1) for ell in (1, 2, 3) for _ in range(9))
        assert vals == pytest.approx(expect, rel=1e-8)

    def test_continuous_block_eigenvalues(self):
        b = G.build_basis([0.4, 0.5, 0.6], [0.2])
        s = G.assemble(G.AngularOperatorSpec(), b)
        lam = sorted(r.lam.real for r in G.solve_gevp(s, 3, 0.0))
        # L = M diag(λ) is similar to diag(λ)
        assert lam == pytest.approx([0.4 * 1.4, 0.5 * 1.5, 0.6 * 1.6], rel=1e-8)

    def test_potential_shift(self):
        b = G.build_basis([1, 2], [0], ["scalar"])
        s = G.assemble(G.AngularOperatorSpec(potential=lambda t, p: np.full(np.broadcast(t, p).shape, 2.0)), b)
        vals = sorted(r.lam.real for r in G.solve_gevp(s, 2, 0.0))
        assert vals == pytest.approx([4.0, 8.0], rel=1e-10)

    def test_empty(self):
        s = G.assemble(G.AngularOperatorSpec(), G.build_basis([], [0.0]))
        with pytest.raises(ValidationError):
            G.solve_gevp(s)


@settings(max_examples=60, deadline=None)
@given(lam=st.floats(-0.25, 50.0))
def test_alpha_branch(lam):
    a = G.alpha_from_lambda(lam)
    assert abs(a * (a + 1) - lam) < 1e-10 * max(1.0, lam)
    assert a.real >= -0.5 - 1e-12


class TestTransforms:
    @settings(max_examples=40, deadline=None)
    @given(alpha=st.floats(-3.0, 0.95), r=st.floats(1e-6, 10.0))
    def test_round_trip(self, alpha, r):
        xi = G.radial_transform(alpha, r)
        assert G.radial_transform(alpha, xi, "to_r") == pytest.approx(r, rel=1e-10)

    def test_domain(self):
        with pytest.raises(DomainError):
            G.radial_transform(1.0, 0.5)
        with pytest.raises(DomainError):
            G.radial_transform(0.5, -1.0)
        with pytest.raises(ValidationError):
            G.radial_transform(0.5, 1.0, "sideways")

    def test_theta_regularize(self):
        h = lambda t, p: t + 0 * p  # noqa: E731
        assert G.theta_regularize(h, 0.0) is h
        reg = G.theta_regularize(h, 0.3)
        assert reg(np.array([0.4]), 0.0)[0] == pytest.approx(0.5, rel=1e-15)
        with pytest.raises(ValidationError):
            G.theta_regularize(h, -1.0)
