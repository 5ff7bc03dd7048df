"""
Tests for the extremal-pair search and derived bounds (extremal.py).
"""

import warnings

import numpy as np
import pytest

from spectral_contour.calculus import certify_operand
from spectral_contour.contour import ContourSpec, make_contour
from spectral_contour.errors import BoundViolated, HypothesisViolated, OptimizerStall
from spectral_contour.extremal import (
    analytic_config_lower,
    bound_check,
    rho_of,
    search_extremal,
    write_trace_csv,
)
from spectral_contour.generators import Polynomial
from spectral_contour.settings import merge_tolerances

ELLIPSE_MATRIX = np.array([[0.3, 0.5], [0.0, -0.2]], dtype=complex)


@pytest.fixture(scope='module')
def nilpotent_result(unit_circle):
    """Search on the unit disk for A = [[0, 2], [0, 0]]."""
    A = np.array([[0.0, 2.0], [0.0, 0.0]], dtype=complex)
    return search_extremal(certify_operand(A, unit_circle), unit_circle, degree=3, restarts=4, seed=1)


class TestSearch:

    def test_nilpotent_disk(self, nilpotent_result):
        r = nilpotent_result
        assert r.gamma_lb == pytest.approx(2.0, abs=1e-6)
        assert r.rho == pytest.approx(0.0, abs=1e-4)
        assert r.bound == pytest.approx(2.0, abs=1e-4)
        assert np.linalg.norm(r.x0) == pytest.approx(1.0, abs=1e-12)
        assert r.f0.sup <= 1.0 + 1e-9

    def test_result_dict(self, nilpotent_result):
        body = nilpotent_result.to_dict()
        assert body['degree'] == 3
        assert body['restarts'] == 4
        assert len(body['coefficients']) == 4
        assert len(body['x0']) == 2

    def test_ellipse_below_universal_constant(self, ellipse):
        op = certify_operand(ELLIPSE_MATRIX, ellipse)
        r = search_extremal(op, ellipse, degree=3, restarts=3, seed=2)
        assert 1.0 <= r.gamma_lb <= 1.0 + np.sqrt(2.0)
        assert r.gamma_lb <= r.bound + 1e-6

    def test_deterministic_for_any_job_count(self, ellipse):
        op = certify_operand(ELLIPSE_MATRIX, ellipse)
        serial = search_extremal(op, ellipse, degree=2, restarts=2, seed=6, n_jobs=1)
        parallel = search_extremal(op, ellipse, degree=2, restarts=2, seed=6, n_jobs=2)
        assert serial.to_dict() == parallel.to_dict()

    def test_degree_limit(self, unit_circle, nilpotent):
        op = certify_operand(nilpotent, unit_circle)
        with pytest.raises(ValueError):
            search_extremal(op, unit_circle, degree=17, restarts=1, seed=0)

    def test_restarts_positive(self, unit_circle, nilpotent):
        op = certify_operand(nilpotent, unit_circle)
        with pytest.raises(ValueError):
            search_extremal(op, unit_circle, degree=2, restarts=0, seed=0)

    def test_non_convex_domain(self, star, nilpotent):
        op = certify_operand(0.25 * nilpotent, star)
        with pytest.raises(HypothesisViolated) as exc_info:
            search_extremal(op, star, degree=2, restarts=1, seed=0)
        assert exc_info.value.failed == ['convex domain']

    def test_more_restarts_never_lower_the_ratio(self, ellipse):
        """Restart seeds are split from one root, so a longer run searches a superset of starts."""
        op = certify_operand(ELLIPSE_MATRIX, ellipse)
        few = search_extremal(op, ellipse, degree=2, restarts=1, seed=6)
        many = search_extremal(op, ellipse, degree=2, restarts=4, seed=6)
        assert many.gamma_lb >= few.gamma_lb - 1e-6

    def test_scale_covariance(self, ellipse):
        """gamma for (uA, u Omega) equals gamma for (A, Omega)."""
        half = make_contour(ContourSpec.ellipse(0j, 1.0, 0.5, nodes=256))
        base = search_extremal(certify_operand(ELLIPSE_MATRIX, ellipse), ellipse, degree=1, restarts=4, seed=2)
        scaled = search_extremal(certify_operand(0.5 * ELLIPSE_MATRIX, half), half, degree=1, restarts=4, seed=2)
        assert scaled.gamma_lb == pytest.approx(base.gamma_lb, abs=1e-4)

    @pytest.mark.parametrize('radius', [0.5, 2.0])
    def test_scaled_nilpotent_disk(self, radius, nilpotent):
        disk = make_contour(ContourSpec.circle(0j, radius, nodes=256))
        r = search_extremal(certify_operand(radius * nilpotent, disk), disk, degree=2, restarts=2, seed=4)
        assert r.gamma_lb == pytest.approx(2.0, abs=1e-4)

    def test_normal_matrix_has_constant_one(self, unit_circle):
        """||p(A)|| = max |p(eigenvalue)| <= sup |p| for normal A, with equality at p = 1."""
        op = certify_operand(np.diag([0.5, -0.5]).astype(complex), unit_circle)
        r = search_extremal(op, unit_circle, degree=3, restarts=3, seed=5)
        assert r.gamma_lb == pytest.approx(1.0, abs=1e-6)

    def test_jordan_block_on_half_disk(self):
        """[[0, 1], [0, 0]] fills the disk of radius 1/2, where the constant is 2."""
        disk = make_contour(ContourSpec.circle(0j, 0.5, nodes=256))
        op = certify_operand(np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex), disk)
        r = search_extremal(op, disk, degree=3, restarts=4, seed=1)
        assert r.gamma_lb == pytest.approx(2.0, abs=1e-4)

    def test_stall_warns(self, unit_circle, nilpotent):
        """Degree 0: every start is a constant, so no restart beats the first."""
        op = certify_operand(nilpotent, unit_circle)
        with pytest.warns(OptimizerStall):
            r = search_extremal(op, unit_circle, degree=0, restarts=2, seed=0)
        assert r.stalled
        assert r.gamma_lb == pytest.approx(1.0, abs=1e-9)

    def test_stall_as_error(self, unit_circle, nilpotent):
        op = certify_operand(nilpotent, unit_circle)
        with warnings.catch_warnings():
            warnings.simplefilter('error', OptimizerStall)
            with pytest.raises(OptimizerStall):
                search_extremal(op, unit_circle, degree=0, restarts=1, seed=0)


class TestRho:

    def test_rejects_non_unit_vector(self, unit_circle, nilpotent, identity_function):
        op = certify_operand(nilpotent, unit_circle)
        with pytest.raises(HypothesisViolated) as exc_info:
            rho_of(op, unit_circle, identity_function.sample(unit_circle), [1.0, 1.0])
        assert exc_info.value.failed[0].startswith('|x0| = 1')

    def test_rejects_large_function(self, unit_circle, nilpotent):
        op = certify_operand(nilpotent, unit_circle)
        with pytest.raises(HypothesisViolated):
            rho_of(op, unit_circle, Polynomial((0.0, 2.0)).sample(unit_circle), [1.0, 0.0])

    def test_constant_function(self, unit_circle, nilpotent):
        """K(1) = 1 on the circle, so rho = Re <x0, x0> = 1."""
        op = certify_operand(nilpotent, unit_circle)
        one = Polynomial((1.0,)).sample(unit_circle)
        assert rho_of(op, unit_circle, one, [0.6, 0.8j]) == pytest.approx(1.0, abs=1e-10)


class TestBounds:

    def test_nilpotent_bounds(self, nilpotent_result):
        report = bound_check(nilpotent_result)
        assert report.slack_rho_bound == pytest.approx(0.0, abs=1e-4)
        assert report.slack_cp == pytest.approx(np.sqrt(2.0) - 1.0, abs=1e-6)
        assert report.disk_slack == pytest.approx(0.0, abs=1e-6)
        # K(f0) is the constant f0(0) = 0 on the disk
        assert report.rho_config_radius == pytest.approx(0.0, abs=1e-6)

    def test_allowance_from_resolved_table(self, nilpotent_result):
        """The nilpotent sits on the rho bound, so a negative allowance rejects it."""
        with pytest.raises(BoundViolated) as exc_info:
            bound_check(nilpotent_result, merge_tolerances({'bound': -0.5}))
        assert exc_info.value.check == 'rho_bound'

    def test_ellipse_has_no_disk_slack(self, ellipse):
        op = certify_operand(ELLIPSE_MATRIX, ellipse)
        report = bound_check(search_extremal(op, ellipse, degree=2, restarts=1, seed=3))
        assert report.disk_slack is None
        assert report.slack_cp >= -1e-6


class TestAnalyticConfiguration:

    def test_disk_collapses(self, unit_circle):
        assert analytic_config_lower(unit_circle, 4, 10, seed=0) == pytest.approx(0.0, abs=1e-9)

    def test_ellipse_below_one(self, ellipse):
        value = analytic_config_lower(ellipse, 3, 20, seed=0)
        assert 0.0 < value < 1.0

    def test_reproducible(self, ellipse):
        assert analytic_config_lower(ellipse, 2, 5, seed=8) == analytic_config_lower(ellipse, 2, 5, seed=8)

    def test_ceiling_from_resolved_table(self, ellipse):
        """A negative 'config_ceiling' rejects any positive estimate."""
        with pytest.raises(BoundViolated) as exc_info:
            analytic_config_lower(ellipse, 2, 5, seed=8, tolerances=merge_tolerances({'config_ceiling': -1.0}))
        assert exc_info.value.check == 'analytic_configuration'


def test_trace_csv(nilpotent_result, tmp_path):
    path = write_trace_csv(nilpotent_result, tmp_path / 'trace.csv')
    lines = path.read_text().splitlines()
    assert lines[0] == 'iteration,value'
    assert len(lines) == len(nilpotent_result.trace) + 1


if __name__ == '__main__':
    pytest.main([__file__, '-v'])
