"""
Cauchy transforms of boundary data.

Interior and exterior transforms are trapezoid sums against d(sigma); the
singular (principal value) transform uses singularity subtraction, with the
half-residue absorbed into the +phi/2 term. plemelj_residuals checks the
Plemelj-Sokhotski relations against one-sided limits extrapolated from
targets just inside and just outside the curve.
"""

import logging
from dataclasses import dataclass, replace
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.interpolate import barycentric_interpolate

from .contour import Contour, refine, spectral_derivative, trig_interpolate, winding_numbers
from .errors import InsideRegion, OutsideRegion

logger = logging.getLogger(__name__)

# one-sided limits: targets at h in [OFFSET_MIN, OFFSET_MAX] * diameter
OFFSET_MIN = 0.0025
OFFSET_MAX = 0.02
OFFSET_COUNT = 9
OFFSET_FINE_NODES = 8192
OFFSET_CHUNK = 512


@dataclass(frozen=True, eq=False)
class BoundarySamples:
    """
    Complex function values at the nodes of a contour.

    ``dt`` holds d(phi)/dt at the nodes when known exactly; ``generator`` is
    the callable the samples came from (used to re-sample on refined
    contours); ``analytic`` marks samples of a function analytic inside.
    """
    contour: Contour
    values: np.ndarray
    dt: Optional[np.ndarray] = None
    analytic: bool = False
    generator: Optional[Callable] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != (self.contour.n,):
            raise ValueError(f"Expected {self.contour.n} samples, got shape {values.shape}")
        object.__setattr__(self, 'values', values)
        if self.dt is not None:
            object.__setattr__(self, 'dt', np.asarray(self.dt, dtype=complex))

    @property
    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def conj(self) -> 'BoundarySamples':
        """Complex conjugate samples (anti-analytic when self is analytic)."""
        gen = self.generator
        return BoundarySamples(
            contour=self.contour,
            values=np.conj(self.values),
            dt=None if self.dt is None else np.conj(self.dt),
            analytic=False,
            generator=None if gen is None else (lambda z, g=gen: np.conj(g(z))),
        )

    def scaled(self, factor: complex) -> 'BoundarySamples':
        gen = self.generator
        return replace(
            self,
            values=factor * self.values,
            dt=None if self.dt is None else factor * self.dt,
            generator=None if gen is None else (lambda z, g=gen: factor * g(z)),
        )

    def __mul__(self, other: 'BoundarySamples') -> 'BoundarySamples':
        if not isinstance(other, BoundarySamples):
            return self.scaled(complex(other))
        if other.contour is not self.contour:
            raise ValueError("Samples live on different contours")
        dt = None
        if self.dt is not None and other.dt is not None:
            dt = self.dt * other.values + self.values * other.dt
        gen = None
        if self.generator is not None and other.generator is not None:
            gen = lambda z, f=self.generator, g=other.generator: f(z) * g(z)
        return BoundarySamples(
            contour=self.contour,
            values=self.values * other.values,
            dt=dt,
            analytic=self.analytic and other.analytic,
            generator=gen,
        )

    __rmul__ = __mul__

    def __add__(self, other: 'BoundarySamples') -> 'BoundarySamples':
        if other.contour is not self.contour:
            raise ValueError("Samples live on different contours")
        dt = None
        if self.dt is not None and other.dt is not None:
            dt = self.dt + other.dt
        gen = None
        if self.generator is not None and other.generator is not None:
            gen = lambda z, f=self.generator, g=other.generator: f(z) + g(z)
        return BoundarySamples(
            contour=self.contour,
            values=self.values + other.values,
            dt=dt,
            analytic=self.analytic and other.analytic,
            generator=gen,
        )


def constant_samples(c: Contour, value: complex = 1.0) -> BoundarySamples:
    """Samples of a constant function."""
    return BoundarySamples(
        contour=c,
        values=np.full(c.n, complex(value)),
        dt=np.zeros(c.n, dtype=complex),
        analytic=True,
        generator=lambda z, v=complex(value): np.full(np.shape(z), v, dtype=complex),
    )


def parameter_derivative(phi: BoundarySamples) -> np.ndarray:
    """d(phi)/dt at the nodes: exact when carried, else by FFT differentiation."""
    if phi.dt is not None:
        return phi.dt
    return spectral_derivative(phi.values)


def cauchy_sums(c: Contour, values: np.ndarray, z) -> np.ndarray:
    """(1/2 pi i) sum_j phi_j d(sigma_j) / (sigma_j - z) for each z, no region checks."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    out = np.empty(z.shape, dtype=complex)
    weighted = values * c.dsigma
    for start in range(0, z.size, OFFSET_CHUNK):
        block = z[start:start + OFFSET_CHUNK]
        out[start:start + OFFSET_CHUNK] = (weighted[None, :] / (c.points[None, :] - block[:, None])).sum(axis=1)
    return out / (2j * np.pi)


def cauchy_interior(c: Contour, phi: BoundarySamples, z: complex) -> complex:
    """
    Interior Cauchy transform at a point inside the curve.

    Raises:
        TooCloseToBoundary: If z violates the standoff rule
        OutsideRegion: If z is outside the curve
    """
    if winding_numbers(c, [z])[0] != 1:
        raise OutsideRegion(f"Point {z} is not inside the contour")
    return complex(cauchy_sums(c, phi.values, [z])[0])


def cauchy_exterior(c: Contour, phi: BoundarySamples, z: complex) -> complex:
    """
    Exterior Cauchy transform at a point outside the curve.

    Raises:
        TooCloseToBoundary: If z violates the standoff rule
        InsideRegion: If z is inside the curve
    """
    if winding_numbers(c, [z])[0] != 0:
        raise InsideRegion(f"Point {z} is not outside the contour")
    return complex(cauchy_sums(c, phi.values, [z])[0])


def _diagonal_limits(c: Contour, phi: BoundarySamples) -> np.ndarray:
    # lim_{j->i} d(sigma_j) (phi_j - phi_i) / (sigma_j - sigma_i) = w_i T_i phi'(t_i) / sigma'(t_i)
    return c.dsigma * parameter_derivative(phi) / c.velocity


def singular_transform(c: Contour, phi: BoundarySamples) -> np.ndarray:
    """Principal-value transform Phi(phi) at every node."""
    diff = c.points[None, :] - c.points[:, None]
    np.fill_diagonal(diff, 1.0)
    kernel = c.dsigma[None, :] / diff
    np.fill_diagonal(kernel, 0.0)
    values = phi.values
    subtracted = kernel @ values - kernel.sum(axis=1) * values
    subtracted += _diagonal_limits(c, phi)
    return subtracted / (2j * np.pi) + 0.5 * values


def cauchy_singular(c: Contour, phi: BoundarySamples, i: int) -> complex:
    """Principal-value transform Phi(phi) at node ``i``."""
    values = phi.values
    diff = c.points - c.points[i]
    diff[i] = 1.0
    terms = c.dsigma * (values - values[i]) / diff
    terms[i] = _diagonal_limits(c, phi)[i]
    return complex(terms.sum() / (2j * np.pi) + 0.5 * values[i])


def limit_offsets(c: Contour) -> np.ndarray:
    """Chebyshev-spaced normal offsets used for one-sided limits."""
    k = np.arange(OFFSET_COUNT)
    x = np.cos((2 * k + 1) * np.pi / (2 * OFFSET_COUNT))
    lo, hi = OFFSET_MIN * c.diameter, OFFSET_MAX * c.diameter
    return np.sort(0.5 * (lo + hi) + 0.5 * (hi - lo) * x)


def fine_density(phi: BoundarySamples, fine: Contour) -> np.ndarray:
    """Density on a refined contour: re-sampled from the generator, else interpolated."""
    if phi.generator is not None:
        return np.asarray(phi.generator(fine.points), dtype=complex)
    return trig_interpolate(phi.values, fine.n // phi.contour.n)


def one_sided_limits(c: Contour, phi: BoundarySamples, kernel: str = 'cauchy') -> Tuple[np.ndarray, np.ndarray]:
    """
    Interior and exterior boundary limits of a layer potential at every node.

    The potential is evaluated at sigma_i -/+ h n_i for Chebyshev-spaced h on
    a refined quadrature, with the node value subtracted from the density
    (its contribution is known exactly: the winding number for the Cauchy
    kernel, twice that for the double layer), then extrapolated to h = 0.

    Args:
        c: Contour
        phi: Density samples on ``c``
        kernel: 'cauchy' or 'dlayer'

    Returns:
        (interior limits, exterior limits)
    """
    factor = max(16, OFFSET_FINE_NODES // c.n)
    fine = refine(c, factor)
    density = fine_density(phi, fine)
    offsets = limit_offsets(c)
    mass = 1.0 if kernel == 'cauchy' else 2.0

    def evaluate(sign: float) -> np.ndarray:
        targets = c.points[:, None] + sign * offsets[None, :] * c.normals[:, None]
        anchors = np.repeat(phi.values, offsets.size)
        flat = targets.ravel()
        out = np.empty(flat.size, dtype=complex)
        for start in range(0, flat.size, OFFSET_CHUNK):
            z = flat[start:start + OFFSET_CHUNK]
            rho = density[None, :] - anchors[start:start + OFFSET_CHUNK, None]
            denom = fine.points[None, :] - z[:, None]
            if kernel == 'cauchy':
                vals = (rho * fine.dsigma[None, :] / denom).sum(axis=1) / (2j * np.pi)
            else:
                pot = np.real(fine.normals[None, :] / denom) / np.pi
                vals = (rho * fine.weights[None, :] * pot).sum(axis=1)
            out[start:start + OFFSET_CHUNK] = vals
        inside = 1.0 if sign < 0 else 0.0
        out += mass * inside * anchors
        return out.reshape(targets.shape)

    inner = barycentric_interpolate(offsets, evaluate(-1.0), 0.0, axis=1)
    outer = barycentric_interpolate(offsets, evaluate(+1.0), 0.0, axis=1)
    return np.asarray(inner), np.asarray(outer)


@dataclass(frozen=True)
class PlemeljResiduals:
    """Residuals of the Plemelj relations, relative to max(1, sup|phi|)."""
    jump_err: float
    interior_err: float
    exterior_err: float

    def worst(self) -> float:
        return max(self.jump_err, self.interior_err, self.exterior_err)


def plemelj_residuals(c: Contour, phi: BoundarySamples) -> PlemeljResiduals:
    """
    Compare Phi(phi) +/- phi/2 with the extrapolated one-sided Cauchy limits.

    Returns:
        PlemeljResiduals with jump, interior and exterior errors
    """
    singular = singular_transform(c, phi)
    inner, outer = one_sided_limits(c, phi, kernel='cauchy')
    scale = max(1.0, phi.sup)
    values = phi.values
    result = PlemeljResiduals(
        jump_err=float(np.max(np.abs(inner - outer - values))) / scale,
        interior_err=float(np.max(np.abs(inner - (singular + 0.5 * values)))) / scale,
        exterior_err=float(np.max(np.abs(outer - (singular - 0.5 * values)))) / scale,
    )
    logger.debug(f"Plemelj residuals on {c.spec.family} (N={c.n}): {result}")
    return result
