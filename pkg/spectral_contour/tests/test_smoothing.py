"""
Tests for the smoothed neighbourhood construction (smoothing.py).

The single-point and triangle cases mirror the built-in acceptance scenes:
eps = 0.4, four levels, grid step 1/160.
"""

import numpy as np
import pytest

from spectral_contour.errors import GridTooCoarse, HypothesisViolated
from spectral_contour.generators import Polynomial
from spectral_contour.smoothing import (
    Grid,
    PointSet,
    SmoothingParams,
    build_domains,
    distance_field,
    fit_fourier,
    make_grid,
    marching_squares,
    mollifier,
    mollify,
    nesting_report,
    spectral_stability,
    write_field_csv,
)

EPSILON = 0.4
H = 0.00625


def square_grid(half_width, h):
    x = np.arange(-half_width, half_width + h / 2, h)
    return Grid(x=x, y=x.copy(), h=h)


@pytest.fixture(scope='module')
def point_set():
    return PointSet(np.array([0j]))


@pytest.fixture(scope='module')
def point_params():
    return SmoothingParams(epsilon=EPSILON, levels=4, h=H)


@pytest.fixture(scope='module')
def point_domains(point_set, point_params):
    return build_domains(point_set, point_params)


class TestParams:
    """Tests for SmoothingParams validation and the level schedule."""

    @pytest.mark.parametrize('kwargs', [
        {'epsilon': 0.0},
        {'levels': 0},
        {'s_fraction': 1.0},
        {'modes': 3},
        {'h': 0.02},
    ])
    def test_invalid(self, kwargs):
        base = {'epsilon': EPSILON, 'levels': 4, 'h': H}
        base.update(kwargs)
        with pytest.raises(ValueError):
            SmoothingParams(**base)

    def test_schedule(self, point_params):
        assert point_params.gap(1) == pytest.approx(0.1)
        assert point_params.s(1) == pytest.approx(0.05)
        for n in range(1, 5):
            for t in point_params.t_candidates(n):
                assert point_params.s(n) < t < point_params.gap(n)
        assert point_params.t_candidates(1)[0] == pytest.approx(0.075)


class TestPointSet:

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            PointSet(np.array([], dtype=complex))

    def test_hull_vertices(self):
        X = PointSet(np.array([0, 1, 1j, 0.2 + 0.2j]), convex_hull_mode=True)
        assert sorted(X.hull.tolist(), key=lambda z: (z.real, z.imag)) == [0j, 1j, 1 + 0j]

    def test_collinear_hull(self):
        X = PointSet(np.array([0, 0.5, 1.0]), convex_hull_mode=True)
        assert sorted(X.hull.real.tolist()) == [0.0, 1.0]

    def test_distance_to_hull(self):
        X = PointSet(np.array([0, 1, 1j]), convex_hull_mode=True)
        dist = distance_field(X, np.array([0.2 + 0.2j, 2.0, -1.0j]))
        np.testing.assert_allclose(dist, [0.0, 1.0, 1.0], atol=1e-12)

    def test_distance_to_points(self):
        X = PointSet(np.array([0, 3]))
        dist = distance_field(X, np.array([1.0, 2.5, 1j]))
        np.testing.assert_allclose(dist, [1.0, 0.5, 1.0], atol=1e-12)


class TestMollifier:

    def test_unit_mass_and_symmetry(self):
        kernel = mollifier(0.05, H)
        assert kernel.shape == (17, 17)
        assert kernel.sum() == pytest.approx(1.0)
        np.testing.assert_allclose(kernel, kernel.T)
        np.testing.assert_allclose(kernel, kernel[::-1, ::-1])
        assert kernel[0, 0] == 0.0

    def test_radius_below_step_is_identity(self):
        kernel = mollifier(0.005, H)
        assert kernel[1, 1] == pytest.approx(1.0)
        assert kernel.sum() == pytest.approx(1.0)

    def test_constants_survive(self):
        field = np.full((30, 40), 3.0)
        smoothed = mollify(field, 0.05, 0.01)
        assert smoothed.shape == field.shape
        np.testing.assert_allclose(smoothed, 3.0)


class TestMarchingSquares:

    def test_circle(self):
        grid = square_grid(1.5, 0.05)
        loops = marching_squares(grid, np.abs(grid.points), 1.013)
        assert len(loops) == 1
        loop = loops[0]
        np.testing.assert_allclose(np.abs(loop), 1.013, atol=5e-3)
        area = 0.5 * np.sum(np.imag(np.conj(loop) * np.roll(loop, -1)))
        assert area == pytest.approx(np.pi * 1.013 ** 2, rel=1e-2)

    def test_two_components(self):
        grid = square_grid(2.0, 0.05)
        z = grid.points
        F = np.minimum(np.abs(z - 1.0), np.abs(z + 1.0))
        loops = marching_squares(grid, F, 0.4)
        assert len(loops) == 2
        centres = sorted(float(np.mean(loop).real) for loop in loops)
        assert centres == pytest.approx([-1.0, 1.0], abs=1e-2)

    def test_open_curve(self):
        grid = square_grid(1.0, 0.1)
        with pytest.raises(GridTooCoarse):
            marching_squares(grid, grid.points.real, 0.05)


class TestFourierFit:

    def test_circle_is_one_mode(self):
        t = np.linspace(0, 2 * np.pi, 200, endpoint=False)
        m, coeffs, residual = fit_fourier(2.0 * np.exp(1j * t), 16)
        assert coeffs[m == 1][0] == pytest.approx(2.0, abs=1e-10)
        assert np.max(np.abs(coeffs[m != 1])) < 1e-10
        assert residual < 1e-10


class TestPointNeighbourhoods:
    """X = {0}: levels are circles of radius about eps/(n+1) + t_n."""

    def test_one_component_per_level(self, point_domains):
        assert [d.level for d in point_domains] == [1, 2, 3, 4]
        for d in point_domains:
            assert len(d.components) == 1

    def test_radii(self, point_domains, point_params):
        for d in point_domains:
            r = np.abs(d.components[0].points)
            n = d.level
            assert r.min() > EPSILON / (n + 1)
            assert r.max() < EPSILON / n
            assert r.max() - r.min() < 2 * H

    def test_nesting(self, point_domains, point_set, point_params):
        checks = nesting_report(point_domains, point_set, point_params)
        assert [c.level for c in checks] == [1, 2, 3, 4]
        assert all(c.x_inside for c in checks)
        assert [c.nested for c in checks] == [True, True, True, None]
        assert all(c.hausdorff <= c.hausdorff_bound for c in checks)
        assert all(c.convex is None for c in checks)

    def test_nesting_needs_two_levels(self, point_domains, point_set, point_params):
        with pytest.raises(ValueError):
            nesting_report(point_domains[:1], point_set, point_params)

    def test_scene_fragments(self, point_domains):
        fragment = point_domains[0].scene_fragments()[0]
        assert fragment['family'] == 'fourier'

    def test_field_csv(self, point_set, point_params, tmp_path):
        grid = make_grid(point_set, point_params)
        path = write_field_csv(grid, distance_field(point_set, grid), tmp_path / 'field.csv')
        data = np.loadtxt(path, delimiter=',', skiprows=1)
        assert data.shape == (grid.x.size * grid.y.size, 3)
        np.testing.assert_allclose(data[:, 2], np.abs(data[:, 0] + 1j * data[:, 1]), atol=1e-12)


class TestSpectralStability:

    A = np.array([[0.0, 0.05], [0.0, 0.0]], dtype=complex)

    def test_table(self, point_domains, point_set, point_params):
        f = Polynomial((1.0, 1.0))
        report = spectral_stability(self.A, f, point_domains, point_set, point_params)
        sups = [row.sup for row in report.rows]
        assert sups == sorted(sups, reverse=True)
        assert report.sup_x == pytest.approx(1.0)
        assert report.limit_ratio == pytest.approx(np.linalg.norm(np.eye(2) + self.A, 2))
        for row in report.rows:
            assert row.homomorphism_error <= 1e-6
            assert row.within_kappa is None
        assert report.first_kappa_violation is None

    def test_kappa_violation(self, point_domains, point_set, point_params):
        f = Polynomial((0.0, 1.0))
        report = spectral_stability(self.A, f, point_domains, point_set, point_params, kappa=0.1)
        # ratio 0.05 / sup climbs from about 0.18 at level 1
        assert report.first_kappa_violation == 1
        relaxed = spectral_stability(self.A, f, point_domains, point_set, point_params, kappa=1.0)
        assert relaxed.first_kappa_violation is None

    def test_tail_criterion_is_reported(self, point_domains, point_set, point_params):
        """Last sup against sup over X, allowed 5% of the first-to-last drop; never raised."""
        report = spectral_stability(self.A, Polynomial((1.0, 1.0)), point_domains, point_set, point_params)
        first, last = report.rows[0].sup, report.rows[-1].sup
        assert report.tail_excess == pytest.approx(last - report.sup_x)
        assert report.tail_allowance == pytest.approx(0.05 * (first - last) + 1e-9)
        assert report.tail_within == (report.tail_excess <= report.tail_allowance)
        # level radii shrink like 1/n, so the last excess is far above 5% of the drop
        assert report.tail_excess > 0.0
        assert report.tail_within is False

    def test_eigenvalue_outside_level(self, point_domains, point_set):
        with pytest.raises(HypothesisViolated) as exc_info:
            spectral_stability(np.diag([0.0, 0.35]), Polynomial((0.0, 1.0)), point_domains, point_set)
        assert exc_info.value.failed == ['spectrum inside every level']


@pytest.mark.slow
class TestHullMode:

    def test_triangle_levels_are_convex(self):
        X = PointSet(np.array([0, 1, 1j]), convex_hull_mode=True)
        p = SmoothingParams(epsilon=EPSILON, levels=4, h=H, modes=64, nodes=512)
        domains = build_domains(X, p, n_jobs=2)
        checks = nesting_report(domains, X, p)
        assert all(c.convex for c in checks)

    def test_disk_sample_ratio_tends_to_two(self):
        """Hull of 64 points on the unit circle with A = [[0, 2], [0, 0]] and f = z."""
        theta = 2 * np.pi * np.arange(64) / 64
        X = PointSet(np.exp(1j * theta), convex_hull_mode=True)
        p = SmoothingParams(epsilon=EPSILON, levels=4, h=H, modes=64, nodes=512, kappa=2.5)
        domains = build_domains(X, p)
        A = np.array([[0.0, 2.0], [0.0, 0.0]], dtype=complex)
        report = spectral_stability(A, Polynomial((0.0, 1.0)), domains, X, p)
        ratios = [row.ratio for row in report.rows]
        assert ratios == sorted(ratios)
        assert report.extrapolated_ratio == pytest.approx(2.0, abs=0.1)
        assert report.first_kappa_violation is None


if __name__ == '__main__':
    pytest.main([__file__, '-v'])
