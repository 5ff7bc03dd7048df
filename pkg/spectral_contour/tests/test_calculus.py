"""
Unit tests for the matrix functional calculi (calculus.py).
"""

import numpy as np
import pytest

from spectral_contour.calculus import (
    CALCULUS_COLUMNS,
    certify_operand,
    critical_scale,
    decomposition_mismatch,
    gamma_apply,
    hat_gamma_apply,
    nrange_boundary_points,
    nrange_inclusion,
    nrange_support,
    numerical_radius,
    op_dl_potential,
    random_operand_matrix,
    run_calculus_ensemble,
    spectrum_inside_count,
    support_sweep,
    sym_calculus_apply,
)
from spectral_contour.cauchy import constant_samples
from spectral_contour.contour import support_function
from spectral_contour.errors import HypothesisViolated, NonConvexDomain, ResolventSingular
from spectral_contour.generators import Polynomial, random_polynomial
from conftest import random_matrix


class TestOperand:
    """Tests for spectrum counting and operand certification."""

    def test_count_inside(self, unit_circle, nilpotent):
        assert spectrum_inside_count(nilpotent, unit_circle) == 2

    def test_partial_count(self, unit_circle):
        assert spectrum_inside_count(np.diag([0.2, 3.0]), unit_circle) == 1

    def test_certify_rejects_outside_eigenvalue(self, unit_circle):
        with pytest.raises(HypothesisViolated) as exc_info:
            certify_operand(np.diag([0.2, 3.0]), unit_circle)
        assert exc_info.value.failed == ['spectrum inside contour']

    def test_eigenvalue_on_node(self, unit_circle):
        """sigma_0 = 1 is an eigenvalue of [[1]]."""
        with pytest.raises(ResolventSingular) as exc_info:
            certify_operand(np.array([[1.0]]), unit_circle)
        assert exc_info.value.node == 0

    def test_operand_is_frozen(self, unit_circle, nilpotent):
        op = certify_operand(nilpotent, unit_circle)
        assert op.dim == 2
        with pytest.raises(ValueError):
            op.A[0, 0] = 1.0
        assert nilpotent.flags.writeable


class TestAnalyticCalculus:
    """gamma(f) = f(A) for polynomials."""

    def test_homomorphism(self, ellipse, rng):
        A = random_operand_matrix(ellipse, 4, rng, 0.9)
        op = certify_operand(A, ellipse)
        for _ in range(5):
            p = random_polynomial(rng, 5)
            f = p.sample(ellipse)
            np.testing.assert_allclose(gamma_apply(op, f), p.matrix_value(A), atol=1e-9)

    def test_identity_function(self, unit_circle, nilpotent, identity_function):
        op = certify_operand(nilpotent, unit_circle)
        np.testing.assert_allclose(gamma_apply(op, identity_function.sample(unit_circle)), nilpotent, atol=1e-12)

    def test_harmonic_extension(self, unit_circle, nilpotent, identity_function):
        op = certify_operand(nilpotent, unit_circle)
        f = identity_function.sample(unit_circle)
        G = hat_gamma_apply(op, f, f)
        np.testing.assert_allclose(G, nilpotent + nilpotent.conj().T, atol=1e-12)

    def test_samples_on_other_contour(self, unit_circle, ellipse, nilpotent):
        op = certify_operand(nilpotent / 4, unit_circle)
        with pytest.raises(ValueError):
            gamma_apply(op, constant_samples(ellipse))


class TestSymmetrisedCalculus:
    """Total mass and the decomposition into analytic and anti-analytic parts."""

    def test_total_mass_ensemble(self, ellipse):
        """sum_j w_j P(sigma_j, A) = 2 I for random certified matrices, dims 2-6."""
        rng = np.random.default_rng(11)
        for k in range(20):
            op = certify_operand(random_operand_matrix(ellipse, 2 + k % 5, rng, 0.9), ellipse)
            total = sym_calculus_apply(op, constant_samples(ellipse, 1.0))
            assert np.linalg.norm(total - 2.0 * np.eye(op.dim), 'fro') <= 1e-8

    def test_decomposition(self, ellipse):
        rng = np.random.default_rng(12)
        for k in range(5):
            op = certify_operand(random_operand_matrix(ellipse, 2 + k, rng, 0.9), ellipse)
            for _ in range(10):
                f = random_polynomial(rng, 4).sample(ellipse)
                assert decomposition_mismatch(op, f) <= 1e-7

    def test_single_node_potential(self, unit_circle, nilpotent):
        op = certify_operand(nilpotent, unit_circle)
        P = op_dl_potential(op, 3)
        np.testing.assert_allclose(P, P.conj().T)
        assert np.linalg.eigvalsh(P).min() >= -1e-12


class TestNumericalRange:
    """Support functions, numerical radius and boundary points."""

    def test_jacobi_and_lapack_paths_agree(self, rng):
        A = random_matrix(rng, 5)
        thetas = np.linspace(0, 2 * np.pi, 13)
        batched = support_sweep(A, thetas)
        for theta, value in zip(thetas, batched):
            assert nrange_support(A, theta) == pytest.approx(value, abs=1e-10)

    def test_numerical_radius(self, nilpotent):
        assert numerical_radius(nilpotent) == pytest.approx(1.0, abs=1e-12)
        assert numerical_radius(np.diag([1.0, -2.0, 0.5j])) == pytest.approx(2.0, abs=1e-12)

    def test_radius_bounds(self, rng):
        """||A|| / 2 <= w(A) <= ||A||."""
        A = random_matrix(rng, 6)
        w, norm = numerical_radius(A), np.linalg.norm(A, 2)
        assert norm / 2 - 1e-12 <= w <= norm + 1e-12

    def test_boundary_points_on_circle(self, nilpotent):
        points = nrange_boundary_points(nilpotent, np.linspace(0, 2 * np.pi, 32, endpoint=False))
        np.testing.assert_allclose(np.abs(points), 1.0, atol=1e-12)

    def test_critical_scale_nilpotent(self, unit_circle, nilpotent):
        assert critical_scale(nilpotent, unit_circle, 0j) == pytest.approx(1.0, abs=1e-6)
        assert critical_scale(nilpotent / 2, unit_circle, 0j) == pytest.approx(2.0, abs=2e-6)

    def test_random_operand_inside(self, ellipse, rng):
        A = random_operand_matrix(ellipse, 3, rng, 0.8)
        thetas = np.linspace(0, 2 * np.pi, 90, endpoint=False)
        assert np.all(support_sweep(A, thetas) <= support_function(ellipse, thetas))
        assert np.trace(A) / 3 == pytest.approx(ellipse.centroid, abs=1e-12)


class TestInclusion:
    """Kernel positivity against the support-function test."""

    def test_nilpotent_on_disk(self, unit_circle, nilpotent):
        """W(A) is the closed unit disk: included, with ||sum w P|| = 2."""
        report = nrange_inclusion(certify_operand(nilpotent, unit_circle))
        assert report.included
        assert report.sym_norm_at_one == pytest.approx(2.0, abs=1e-6)

    def test_scaled_out(self, unit_circle, nilpotent):
        report = nrange_inclusion(certify_operand(1.5 * nilpotent, unit_circle))
        assert not report.included
        assert report.support_slack < 0
        assert report.min_eig_P < 0

    def test_non_convex_domain(self, star):
        with pytest.raises(NonConvexDomain):
            nrange_inclusion(certify_operand(np.diag([0.1, -0.1]), star))

    def test_other_contour_rejected(self, unit_circle, ellipse, nilpotent):
        with pytest.raises(ValueError):
            nrange_inclusion(certify_operand(nilpotent, unit_circle), ellipse)

    @pytest.mark.slow
    def test_verdicts_agree_on_straddling_ensemble(self, ellipse):
        """100 matrices scaled around the critical size: both tests agree, and ||sym(1)|| = 2 when included."""
        rng = np.random.default_rng(13)
        fractions = [0.5, 0.8, 0.95, 1.05, 1.2]
        checked = 0
        for k in range(100):
            fraction = fractions[k % len(fractions)]
            try:
                op = certify_operand(random_operand_matrix(ellipse, 2 + k % 4, rng, fraction), ellipse)
            except HypothesisViolated:
                continue
            report = nrange_inclusion(op)
            assert report.included == (fraction < 1.0)
            if report.included:
                assert report.sym_norm_at_one == pytest.approx(2.0, abs=1e-6)
            checked += 1
        assert checked >= 80


class TestCalculusEnsemble:
    """Random certified matrices: total mass, decomposition and inclusion verdicts per row."""

    def test_rows(self, ellipse):
        rows = run_calculus_ensemble(ellipse, 5, [2, 3], 3, seed=4, functions=2)
        assert [row['trial'] for row in rows] == list(range(5))
        assert [row['dim'] for row in rows] == [2, 3, 2, 3, 2]
        for row in rows:
            assert set(row) == set(CALCULUS_COLUMNS)
            assert row['certified']
            assert row['total_mass_error'] <= 1e-8
            assert row['decomposition_mismatch'] <= 1e-7
            assert row['included'] is True
            assert row['inclusion_agrees'] is True
            assert row['sym_norm_at_one'] == pytest.approx(2.0, abs=1e-6)

    def test_same_rows_for_any_job_count(self, ellipse):
        serial = run_calculus_ensemble(ellipse, 3, [2], 2, seed=8, functions=1, n_jobs=1)
        parallel = run_calculus_ensemble(ellipse, 3, [2], 2, seed=8, functions=1, n_jobs=2)
        assert serial == parallel

    def test_no_inclusion_verdict_off_convex_domains(self, star):
        rows = run_calculus_ensemble(star, 2, [2], 2, seed=1, scale_fractions=[0.5], functions=1)
        assert all(row['inclusion_agrees'] is None for row in rows if row['certified'])

    def test_trials_positive(self, ellipse):
        with pytest.raises(ValueError):
            run_calculus_ensemble(ellipse, 0, [2], 2, seed=0)

    @pytest.mark.slow
    def test_straddling_scales(self, ellipse):
        """100 draws around the critical size: the verdicts agree and follow the scale."""
        rows = run_calculus_ensemble(ellipse, 100, [2, 3, 4, 5], 3, seed=13,
                                     scale_fractions=[0.5, 0.8, 0.95, 1.05, 1.2], functions=2, n_jobs=2)
        certified = [row for row in rows if row['certified']]
        assert len(certified) >= 80
        assert all(row['inclusion_agrees'] for row in certified)
        assert {row['included'] for row in certified} == {True, False}


if __name__ == '__main__':
    pytest.main([__file__, '-v'])
