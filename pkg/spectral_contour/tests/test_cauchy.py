"""
Unit tests for Cauchy transforms and the Plemelj relations (cauchy.py).
"""

import numpy as np
import pytest

from spectral_contour.cauchy import (
    BoundarySamples,
    cauchy_exterior,
    cauchy_interior,
    cauchy_singular,
    constant_samples,
    limit_offsets,
    plemelj_residuals,
    singular_transform,
)
from spectral_contour.contour import ContourSpec, make_contour
from spectral_contour.errors import InsideRegion, OutsideRegion, TooCloseToBoundary
from spectral_contour.generators import Polynomial, Rational, from_samples


class TestBoundarySamples:
    """Tests for the sample container."""

    def test_shape_checked(self, unit_circle):
        with pytest.raises(ValueError):
            BoundarySamples(contour=unit_circle, values=np.ones(10))

    def test_product_keeps_analyticity(self, unit_circle):
        f = Polynomial((0.0, 1.0)).sample(unit_circle)
        g = Polynomial((1.0, 0.0, 2.0)).sample(unit_circle)
        assert (f * g).analytic
        assert not (f * f.conj()).analytic
        np.testing.assert_allclose((f * f.conj()).values, 1.0, atol=1e-14)

    def test_product_derivative(self, ellipse):
        """d/dt of a product by the product rule matches the generator."""
        f = Polynomial((0.0, 1.0)).sample(ellipse)
        square = Polynomial((0.0, 0.0, 1.0)).sample(ellipse)
        np.testing.assert_allclose((f * f).dt, square.dt, atol=1e-12)

    def test_samples_on_different_contours(self, unit_circle, ellipse):
        with pytest.raises(ValueError):
            constant_samples(unit_circle) * constant_samples(ellipse)


class TestInteriorExterior:
    """Tests for the interior and exterior transforms."""

    def test_reproduces_polynomial_inside(self, ellipse):
        """Cauchy's formula: the interior transform of analytic data is the function."""
        p = Polynomial((1.0, -2j, 0.5, 0.25j))
        z = 0.3 + 0.2j
        assert cauchy_interior(ellipse, p.sample(ellipse), z) == pytest.approx(complex(p(z)), abs=1e-11)

    def test_exterior_of_analytic_vanishes(self, unit_circle):
        """sigma^2 on the unit circle at z = 3 gives 0."""
        phi = Polynomial((0.0, 0.0, 1.0)).sample(unit_circle)
        assert abs(cauchy_exterior(unit_circle, phi, 3.0)) < 1e-13

    def test_conjugate_data(self, unit_circle):
        """conj(sigma) = 1/sigma: interior 0, exterior -1/z."""
        phi = Polynomial((0.0, 1.0)).sample(unit_circle).conj()
        assert abs(cauchy_interior(unit_circle, phi, 0.4j)) < 1e-13
        assert cauchy_exterior(unit_circle, phi, 3.0) == pytest.approx(-1.0 / 3.0, abs=1e-13)

    def test_rational_with_outside_pole(self, ellipse):
        r = Rational((1.0,), (-3.0, 1.0))
        phi = r.sample(ellipse)
        assert phi.analytic
        assert cauchy_interior(ellipse, phi, 0.5) == pytest.approx(complex(r(0.5)), abs=1e-10)
        assert abs(cauchy_exterior(ellipse, phi, 5.0)) < 1e-10

    def test_region_errors(self, unit_circle):
        phi = constant_samples(unit_circle)
        with pytest.raises(OutsideRegion):
            cauchy_interior(unit_circle, phi, 2.0)
        with pytest.raises(InsideRegion):
            cauchy_exterior(unit_circle, phi, 0.0)
        with pytest.raises(TooCloseToBoundary):
            cauchy_interior(unit_circle, phi, 0.999)


class TestSingularTransform:
    """Tests for the principal-value transform."""

    def test_analytic_data_gives_half(self, ellipse):
        """Phi(f) = f/2 for f analytic inside."""
        phi = Polynomial((0.5, 1.0, -0.3j)).sample(ellipse)
        np.testing.assert_allclose(singular_transform(ellipse, phi), 0.5 * phi.values, atol=1e-10)

    def test_antianalytic_data_gives_minus_half(self, unit_circle):
        """Phi(conj sigma) = -conj(sigma)/2 on the unit circle."""
        phi = Polynomial((0.0, 1.0)).sample(unit_circle).conj()
        np.testing.assert_allclose(singular_transform(unit_circle, phi), -0.5 * phi.values, atol=1e-10)

    def test_raw_samples_use_fft_derivative(self, ellipse):
        raw = from_samples(ellipse, ellipse.points ** 2)
        np.testing.assert_allclose(singular_transform(ellipse, raw), 0.5 * raw.values, atol=1e-8)

    def test_single_node_matches_vector(self, star):
        phi = Polynomial((1.0, 1j, 0.2)).sample(star)
        full = singular_transform(star, phi)
        for i in (0, 17, star.n - 1):
            assert cauchy_singular(star, phi, i) == pytest.approx(full[i], abs=1e-12)


class TestPlemelj:
    """Tests for the jump relations against extrapolated one-sided limits."""

    def test_limit_offsets_in_range(self, ellipse):
        h = limit_offsets(ellipse)
        assert h.size == 9
        assert np.all(np.diff(h) > 0)
        assert h.min() >= 0.0025 * ellipse.diameter
        assert h.max() <= 0.02 * ellipse.diameter

    def test_polynomial_on_circle(self, unit_circle):
        res = plemelj_residuals(unit_circle, Polynomial((1.0, 0.5j, 0.25)).sample(unit_circle))
        assert res.worst() <= 1e-6

    def test_antianalytic_on_circle(self, unit_circle):
        res = plemelj_residuals(unit_circle, Polynomial((0.0, 1.0, 0.5)).sample(unit_circle).conj())
        assert res.worst() <= 1e-6

    @pytest.mark.slow
    @pytest.mark.parametrize('spec', [
        ContourSpec.circle(0.5 - 0.25j, 2.0, nodes=512),
        ContourSpec.ellipse(0j, 2.0, 1.0, nodes=512),
        ContourSpec.star(1.0, 0.3, 3, nodes=512),
    ], ids=['circle', 'ellipse', 'star'])
    def test_all_families_at_512(self, spec):
        """Polynomial and rational data satisfy the jump relations to 1e-6."""
        c = make_contour(spec)
        pole = c.centroid + c.diameter
        for gen in (Polynomial((1.0, -0.5, 0.25j), c.centroid), Rational((1.0,), (-pole, 1.0))):
            assert plemelj_residuals(c, gen.sample(c)).worst() <= 1e-6


if __name__ == '__main__':
    pytest.main([__file__, '-v'])
