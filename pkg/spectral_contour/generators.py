"""
Function generators for boundary data.

Each generator evaluates a closed-form function and its complex derivative,
so samples carry exact parameter derivatives (for the singular Cauchy
transform) and can be re-sampled on refined contours.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.optimize import minimize_scalar

from .cauchy import BoundarySamples
from .contour import Contour, curve_derivatives, refine, winding_numbers
from .errors import TooCloseToBoundary

logger = logging.getLogger(__name__)


class Generator:
    """Base class: callable f(z) with derivative f'(z)."""

    def __call__(self, z) -> np.ndarray:
        raise NotImplementedError

    def derivative(self, z) -> np.ndarray:
        raise NotImplementedError

    def is_analytic_inside(self, c: Contour) -> bool:
        return True

    def sample(self, c: Contour) -> BoundarySamples:
        """Values at the nodes of ``c`` with exact d/dt = f'(sigma) sigma'."""
        return BoundarySamples(
            contour=c,
            values=self(c.points),
            dt=self.derivative(c.points) * c.velocity,
            analytic=self.is_analytic_inside(c),
            generator=self,
        )


@dataclass(frozen=True)
class Polynomial(Generator):
    """p(z) = sum_k coefficients[k] * (z - center)**k."""
    coefficients: Sequence[complex]
    center: complex = 0j

    def __post_init__(self):
        coeffs = np.atleast_1d(np.asarray(self.coefficients, dtype=complex))
        if coeffs.size == 0:
            coeffs = np.zeros(1, dtype=complex)
        object.__setattr__(self, 'coefficients', tuple(coeffs))

    @property
    def coeffs(self) -> np.ndarray:
        return np.asarray(self.coefficients, dtype=complex)

    @property
    def degree(self) -> int:
        nz = np.flatnonzero(self.coeffs)
        return int(nz[-1]) if nz.size else 0

    def is_zero(self) -> bool:
        return not np.any(self.coeffs)

    def __call__(self, z) -> np.ndarray:
        return P.polyval(np.asarray(z, dtype=complex) - self.center, self.coeffs)

    def derivative(self, z) -> np.ndarray:
        if self.coeffs.size == 1:
            return np.zeros(np.shape(z), dtype=complex)
        return P.polyval(np.asarray(z, dtype=complex) - self.center, P.polyder(self.coeffs))

    def scaled(self, factor: complex) -> 'Polynomial':
        return Polynomial(tuple(factor * self.coeffs), self.center)

    def matrix_value(self, A: np.ndarray) -> np.ndarray:
        """p(A) by Horner's rule in matrix arithmetic."""
        A = np.asarray(A, dtype=complex)
        eye = np.eye(A.shape[0], dtype=complex)
        shifted = A - self.center * eye
        result = np.zeros_like(shifted)
        for a in self.coeffs[::-1]:
            result = result @ shifted + a * eye
        return result


@dataclass(frozen=True)
class Rational(Generator):
    """r(z) = num(z - center) / den(z - center), coefficient lists in ascending powers."""
    numerator: Sequence[complex]
    denominator: Sequence[complex]
    center: complex = 0j

    def __post_init__(self):
        num = np.atleast_1d(np.asarray(self.numerator, dtype=complex))
        den = np.atleast_1d(np.asarray(self.denominator, dtype=complex))
        if not np.any(den):
            raise ValueError("Rational generator needs a nonzero denominator")
        object.__setattr__(self, 'numerator', tuple(num))
        object.__setattr__(self, 'denominator', tuple(den))

    @property
    def poles(self) -> np.ndarray:
        den = np.trim_zeros(np.asarray(self.denominator, dtype=complex), 'b')
        if den.size <= 1:
            return np.zeros(0, dtype=complex)
        return P.polyroots(den) + self.center

    def __call__(self, z) -> np.ndarray:
        w = np.asarray(z, dtype=complex) - self.center
        return P.polyval(w, np.asarray(self.numerator)) / P.polyval(w, np.asarray(self.denominator))

    def derivative(self, z) -> np.ndarray:
        w = np.asarray(z, dtype=complex) - self.center
        num, den = np.asarray(self.numerator), np.asarray(self.denominator)
        d_num = P.polyder(num) if num.size > 1 else np.zeros(1, dtype=complex)
        d_den = P.polyder(den) if den.size > 1 else np.zeros(1, dtype=complex)
        n_val, d_val = P.polyval(w, num), P.polyval(w, den)
        return (P.polyval(w, d_num) * d_val - n_val * P.polyval(w, d_den)) / d_val ** 2

    def is_analytic_inside(self, c: Contour) -> bool:
        poles = self.poles
        if poles.size == 0:
            return True
        try:
            return bool(np.all(winding_numbers(c, poles) == 0))
        except TooCloseToBoundary:
            return False


@dataclass(frozen=True)
class Exponential(Generator):
    """f(z) = amplitude * exp(rate * z)."""
    rate: complex = 1.0
    amplitude: complex = 1.0

    def __call__(self, z) -> np.ndarray:
        return self.amplitude * np.exp(self.rate * np.asarray(z, dtype=complex))

    def derivative(self, z) -> np.ndarray:
        return self.rate * self(z)


def monomial(k: int, center: complex = 0j) -> Polynomial:
    coeffs = np.zeros(k + 1, dtype=complex)
    coeffs[k] = 1.0
    return Polynomial(tuple(coeffs), center)


def random_polynomial(
    rng: np.random.Generator,
    degree: int,
    center: complex = 0j,
    vanish_at_center: bool = False,
) -> Polynomial:
    """Complex Gaussian coefficients in powers of (z - center)."""
    coeffs = rng.standard_normal(degree + 1) + 1j * rng.standard_normal(degree + 1)
    if vanish_at_center:
        coeffs[0] = 0.0
        if degree == 0:
            raise ValueError("A degree-0 polynomial vanishing at the center is zero")
    return Polynomial(tuple(coeffs), center)


def from_samples(c: Contour, values, dt: Optional[np.ndarray] = None) -> BoundarySamples:
    """Wrap raw node values (no generator)."""
    return BoundarySamples(contour=c, values=np.asarray(values, dtype=complex), dt=dt)


def generator_sup(c: Contour, gen: Callable, candidates: int = 4) -> float:
    """
    sup of |gen| over the curve itself, not just the nodes.

    The curve is sampled 16 times finer than ``c``; the best few samples are
    polished by bounded scalar maximisation in the curve parameter.
    """
    fine = refine(c)
    modulus = np.abs(gen(fine.points))
    step = fine.t[1] - fine.t[0]
    best = float(np.max(modulus))
    for k in np.argsort(modulus)[::-1][:candidates]:
        t0 = fine.t[k]
        res = minimize_scalar(
            lambda t: -float(np.abs(gen(curve_derivatives(c.spec, t)[0]))),
            bounds=(t0 - step, t0 + step),
            method='bounded',
            options={'xatol': 1e-13},
        )
        best = max(best, -float(res.fun))
    return best
