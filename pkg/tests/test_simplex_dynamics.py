import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ggmtree.errors import BoundaryError, DomainError, NoGapError, SeedError, ShapeError, StepSizeError
from ggmtree.simplex_dynamics import (
    apply_S,
    as_simplex,
    backward_orbit,
    equidistribution,
    hadamard_power,
    jacobian_fd,
    jacobian_S,
    manifold_orbit,
    seed_on_manifold,
    spectrum_at_eq,
    tangent_basis,
    unstable_subspace,
)
from ggmtree.transfer_ops import FuzzyOperator, TransferOperator, fuzzy

from conftest import REF_D, random_custom

FIG1_A = 1536 / (73 * math.pi**2)


def _quiet_seed(*args, **kwargs):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return seed_on_manifold(*args, **kwargs)


class TestHadamardPower:
    def test_known_value(self):
        assert hadamard_power([0.6, 0.4], 3) == pytest.approx([0.216 / 0.28, 0.064 / 0.28], abs=1e-12)

    def test_inverse_pair(self):
        assert hadamard_power(hadamard_power([0.6, 0.4], 3), 1 / 3) == pytest.approx([0.6, 0.4], abs=1e-14)

    def test_eq_fixed(self):
        assert hadamard_power(equidistribution(5), 4) == pytest.approx(equidistribution(5))

    def test_zero_power(self):
        with pytest.raises(DomainError):
            hadamard_power([0.5, 0.5], 0)


class TestApplyS:
    def test_reference_value(self, ref_fz):
        assert apply_S(ref_fz, 3, np.array([0.6, 0.4])) == pytest.approx([0.928 / 1.4, 0.472 / 1.4], abs=1e-14)

    def test_symmetric_point_fixed(self, ref_fz):
        assert apply_S(ref_fz, 3, np.array([0.5, 0.5])) == pytest.approx([0.5, 0.5], abs=1e-15)

    @pytest.mark.parametrize("q", [2, 3, 7, 16, 32])
    @pytest.mark.parametrize("d", [2, 4, 6])
    def test_eq_fixed_point(self, q, d):
        for op in (TransferOperator.sos(0.7), TransferOperator.inverse_square(1.3)):
            eq = equidistribution(q)
            assert np.abs(apply_S(fuzzy(op, q), d, eq) - eq).sum() < 1e-14

    def test_shape_error(self, ref_fz):
        with pytest.raises(ShapeError):
            apply_S(ref_fz, 3, np.ones(3) / 3)

    def test_analytic_jacobian_matches_fd(self):
        fz = fuzzy(TransferOperator.sos(0.8), 5)
        u = np.array([0.3, 0.25, 0.2, 0.15, 0.1])
        fd = jacobian_fd(fz, 3, u, 1e-6)
        B = fd.basis
        assert np.allclose(B.T @ jacobian_S(fz, 3, u) @ B, fd.matrix, atol=1e-8)


class TestSpectrum:
    def test_reference_eigenvalue(self, ref_fz):
        rep = spectrum_at_eq(ref_fz, REF_D)
        assert len(rep.eigenvalues) == 1
        assert rep.eigenvalues[0].value == pytest.approx(1.8, abs=1e-12)
        assert rep.eigenvalues[0].multiplicity == 1
        assert rep.unstable_dim == 1
        assert rep.tau == pytest.approx(math.sqrt(1.8), abs=1e-12)

    def test_fd_matches_reference(self, ref_fz):
        ev = jacobian_fd(ref_fz, REF_D, equidistribution(2)).eigenvalues()
        assert ev.real == pytest.approx([1.8], abs=1e-6)

    def test_tangent_maps_to_tangent(self):
        fz = fuzzy(TransferOperator.sos(0.5), 6)
        amb = jacobian_fd(fz, 3, equidistribution(6)).ambient
        assert np.abs(amb.sum(axis=0)).max() < 1e-9
        assert np.abs(amb.sum(axis=1)).max() < 1e-9

    def test_figure_neutral(self):
        op = TransferOperator.inverse_square(FIG1_A)
        rep = spectrum_at_eq(fuzzy(op, 16), 5, op)
        assert abs(abs(rep.eigenvalues[2].value) - 1) < 1e-10
        assert rep.neutral_indices == [3]
        assert rep.tau is not None and rep.classify(3) == "neutral"

    def test_d1_scaling(self):
        op = TransferOperator.sos(0.9)
        rep2 = spectrum_at_eq(fuzzy(op, 8), 2, op)
        assert all(abs(e.value / 2) <= 1 for e in rep2.eigenvalues)

    def test_multiplicities(self):
        rep = spectrum_at_eq(fuzzy(TransferOperator.sos(1.0), 6), 2)
        assert [e.multiplicity for e in rep.eigenvalues] == [2, 2, 1]

    def test_tau_invariants(self):
        for q in range(2, 13):
            rep = spectrum_at_eq(fuzzy(TransferOperator.sos(0.4), q), 4)
            if rep.tau is None:
                continue
            mods = [abs(e.value) for e in rep.eigenvalues]
            assert all(m != rep.tau for m in mods)
            assert any(m > rep.tau for m in mods)
            assert rep.unstable_dim == sum(e.multiplicity for e in rep.eigenvalues if abs(e.value) > rep.tau)

    def test_no_gap(self):
        rep = spectrum_at_eq(fuzzy(TransferOperator.sos(1.0), 2), 3)
        assert rep.tau is None
        with pytest.raises(NoGapError):
            unstable_subspace(rep)

    @pytest.mark.parametrize("seed", range(20))
    def test_random_custom_fd(self, seed):
        rng = np.random.default_rng(100 + seed)
        op = random_custom(rng)
        d = int(rng.integers(2, 5))
        for q in range(2, 13):
            fz = fuzzy(op, q)
            rep = spectrum_at_eq(fz, d, op)
            analytic = sorted(v for e in rep.eigenvalues for v in [e.value] * e.multiplicity)
            fd = sorted(jacobian_fd(fz, d, equidistribution(q)).eigenvalues().real)
            assert np.allclose(analytic, fd, atol=1e-6)

    def test_fd_step_checks(self, ref_fz):
        with pytest.raises(DomainError):
            jacobian_fd(ref_fz, 3, equidistribution(2), 1e-2)
        with pytest.raises(StepSizeError):
            jacobian_fd(ref_fz, 3, np.array([1 - 1e-9, 1e-9]), 1e-4)


class TestUnstableSubspace:
    def test_q2_mode(self, ref_fz):
        (v,) = unstable_subspace(spectrum_at_eq(ref_fz, 3))
        assert v == pytest.approx(np.array([1, -1]) / math.sqrt(2))

    def test_q4_pair(self):
        op = TransferOperator.sos(2.0)
        rep = spectrum_at_eq(fuzzy(op, 4), 2, op)
        modes = unstable_subspace(rep)
        assert 1 in rep.unstable_indices
        c, s = modes[0], modes[1]
        assert abs(np.dot(c, s)) < 1e-15
        assert c == pytest.approx(np.cos(2 * np.pi * np.arange(4) / 4) / math.sqrt(2))

    def test_modes_are_eigenvectors(self):
        op = TransferOperator.inverse_square(1.0)
        fz = fuzzy(op, 9)
        rep = spectrum_at_eq(fz, 5, op)
        basis, labels = tangent_basis(9)
        for (j, _), v in zip(labels, basis.T):
            assert np.abs(fz.apply(v) - fz.eigenvalue(j) * v).max() < 1e-10
        assert len(unstable_subspace(rep)) == rep.unstable_dim

    def test_basis_orthonormal(self):
        for q in (2, 5, 8):
            B, _ = tangent_basis(q)
            assert np.allclose(B.T @ B, np.eye(q - 1), atol=1e-14)
            assert np.abs(B.sum(axis=0)).max() < 1e-14


class TestSeed:
    def test_eps_zero(self, ref_fz):
        rep = spectrum_at_eq(ref_fz, 3)
        assert seed_on_manifold(rep, unstable_subspace(rep), 0.0) == pytest.approx([0.5, 0.5])

    def test_known_seed(self, ref_fz):
        rep = spectrum_at_eq(ref_fz, 3)
        u = _quiet_seed(rep, unstable_subspace(rep), 0.2)
        assert u == pytest.approx([0.6414214, 0.3585786], abs=1e-7)

    def test_seed_outside(self, ref_fz):
        rep = spectrum_at_eq(ref_fz, 3)
        with pytest.raises(SeedError):
            _quiet_seed(rep, unstable_subspace(rep), 0.9)

    def test_large_eps_warns(self, ref_fz):
        rep = spectrum_at_eq(ref_fz, 3)
        with pytest.warns(UserWarning):
            seed_on_manifold(rep, unstable_subspace(rep), 0.2)

    @given(st.floats(1e-6, 0.04), st.floats(0, 2 * math.pi))
    @settings(max_examples=40, deadline=None)
    def test_chart_distance(self, eps, angle):
        op = TransferOperator.sos(1.2)
        rep = spectrum_at_eq(fuzzy(op, 6), 3, op)
        modes = unstable_subspace(rep)
        coeffs = np.zeros(len(modes))
        coeffs[0], coeffs[1] = math.cos(angle), math.sin(angle)
        u = seed_on_manifold(rep, modes, eps, coeffs)
        assert abs(np.linalg.norm(u - equidistribution(6)) - eps) < 1e-12
        assert abs(u.sum() - 1) < 1e-15 and u.min() > 0


class TestBackwardOrbit:
    def test_eq_stays(self, ref_fz):
        orb = backward_orbit(ref_fz, 3, equidistribution(2), 5)
        assert all(np.allclose(p, 0.5) for p in orb.points)

    def test_inverts_apply_S(self, ref_fz):
        orb = backward_orbit(ref_fz, 3, np.array([116 / 175, 59 / 175]), 1)
        assert orb.points[1] == pytest.approx([0.6, 0.4], abs=1e-10)

    def test_orbit_from_072(self, ref_fz):
        orb = backward_orbit(ref_fz, 3, np.array([0.72, 0.28]), 12)
        first = [p[0] for p in orb.points]
        assert all(a > b > 0.5 for a, b in zip(first, first[1:]))
        assert max(orb.residuals) < 1e-12
        for k in range(12):
            assert np.abs(apply_S(ref_fz, 3, orb.points[k + 1]) - orb.points[k]).sum() < 1e-12

    @pytest.mark.parametrize("eps", [1e-2, 1e-3])
    def test_rate(self, ref_fz, eps):
        rep = spectrum_at_eq(ref_fz, 3)
        u = seed_on_manifold(rep, unstable_subspace(rep), eps)
        orb = backward_orbit(ref_fz, 3, u, 15)
        dist = orb.distances()
        ratios = dist[3:] / dist[2:-1]
        assert np.all(ratios <= 1 / rep.tau + 0.05)
        assert orb.rate_estimate >= rep.tau

    def test_boundary_error(self, ref_fz):
        # (0.8, 0.2) has no preimage in the simplex: S maps onto first components < 0.8
        with pytest.raises(BoundaryError) as info:
            backward_orbit(ref_fz, 3, np.array([0.85, 0.15]), 3)
        assert len(info.value.orbit.points) == 1

    def test_as_simplex_checks(self):
        with pytest.raises(DomainError):
            as_simplex([0.5, 0.6])
        with pytest.raises(DomainError):
            as_simplex([1.0, 0.0])


class TestManifoldOrbit:
    @pytest.fixture
    def setup(self):
        op = TransferOperator.sos(1.0)
        fz = fuzzy(op, 8)
        rep = spectrum_at_eq(fz, 3, op)
        return fz, rep

    def test_residuals(self, setup):
        fz, rep = setup
        coeffs = np.ones(rep.unstable_dim) / math.sqrt(rep.unstable_dim)
        orb = manifold_orbit(fz, 3, rep, 1e-2, coeffs, 40)
        assert orb.complete and max(orb.residuals) < 1e-13
        assert rep.unstable_dim < 7  # there are contracting modes

    @pytest.mark.parametrize("eps", [1e-2, 1e-3])
    def test_rate(self, setup, eps):
        fz, rep = setup
        orb = manifold_orbit(fz, 3, rep, eps, None, 40)
        dist = orb.distances()
        ratios = dist[3:30] / dist[2:29]
        assert np.all(ratios <= 1 / rep.tau + 0.05)

    def test_agrees_with_newton_on_q2(self, ref_fz):
        rep = spectrum_at_eq(ref_fz, 3)
        u = seed_on_manifold(rep, unstable_subspace(rep), 1e-2)
        a = backward_orbit(ref_fz, 3, u, 10)
        b = manifold_orbit(ref_fz, 3, rep, 1e-2, None, 10)
        assert np.allclose(np.array(a.points), np.array(b.points), atol=1e-12)

    def test_chart_curvature_is_second_order(self, setup):
        fz, rep = setup
        basis, labels = tangent_basis(8)
        stable = [i for i, (j, _) in enumerate(labels) if j not in rep.unstable_indices]
        h = []
        # mixing frequencies 1 and 2 feeds the contracting frequency 3 at second order
        coeffs = np.array([1.0, 0.0, 1.0, 0.0]) / math.sqrt(2)
        for eps in (1e-2, 5e-3):
            p0 = manifold_orbit(fz, 3, rep, eps, coeffs, 40).points[0]
            h.append(np.linalg.norm((basis.T @ (p0 - equidistribution(8)))[stable]))
        assert h[0] / h[1] == pytest.approx(4.0, rel=0.05)
