"""
Discretised smooth closed curves.

A ContourSpec names a curve family and its parameters; make_contour samples
it at N uniform parameter nodes t_j = 2*pi*j/N together with velocity,
outward normal, curvature and trapezoid weights. Contours are immutable and
hash by identity, so derived objects (refinements, Nystrom matrices) can be
cached per contour.
"""

import logging
from dataclasses import dataclass, field, replace
from functools import cached_property, lru_cache
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .errors import DegenerateSpec, SelfIntersecting, TooCloseToBoundary
from .geometry import polyline_self_intersects

logger = logging.getLogger(__name__)

FAMILIES = ('circle', 'ellipse', 'star', 'fourier')
MIN_NODES = 32
SIMPLE_SCAN_FACTOR = 4
REFINE_FACTOR = 16


@dataclass(frozen=True)
class ContourSpec:
    """
    Curve family and parameters.

    circle: center, radius; ellipse: center, a, b; star: center, base_radius,
    amplitude, lobes (r(t) = base_radius * (1 + amplitude * cos(lobes * t)));
    fourier: sigma(t) = sum_m coefficients[m] * exp(i * modes[m] * t).
    """
    family: str
    nodes: int = 256
    center: complex = 0j
    radius: float = 1.0
    a: float = 1.0
    b: float = 1.0
    base_radius: float = 1.0
    amplitude: float = 0.0
    lobes: int = 3
    modes: Tuple[int, ...] = ()
    coefficients: Tuple[complex, ...] = ()

    @classmethod
    def circle(cls, center: complex = 0j, radius: float = 1.0, nodes: int = 256) -> 'ContourSpec':
        return cls('circle', nodes=nodes, center=complex(center), radius=float(radius))

    @classmethod
    def ellipse(cls, center: complex = 0j, a: float = 2.0, b: float = 1.0, nodes: int = 256) -> 'ContourSpec':
        return cls('ellipse', nodes=nodes, center=complex(center), a=float(a), b=float(b))

    @classmethod
    def star(cls, base_radius: float = 1.0, amplitude: float = 0.3, lobes: int = 3,
             nodes: int = 256, center: complex = 0j) -> 'ContourSpec':
        return cls('star', nodes=nodes, center=complex(center), base_radius=float(base_radius),
                   amplitude=float(amplitude), lobes=int(lobes))

    @classmethod
    def fourier(cls, modes: Sequence[int], coefficients: Sequence[complex], nodes: int = 256) -> 'ContourSpec':
        return cls('fourier', nodes=nodes, modes=tuple(int(m) for m in modes),
                   coefficients=tuple(complex(c) for c in coefficients))

    def with_nodes(self, nodes: int) -> 'ContourSpec':
        return replace(self, nodes=int(nodes))

    def disk(self) -> Optional[Tuple[complex, float]]:
        """(center, radius) when the curve is a circle, else None."""
        if self.family == 'circle':
            return self.center, self.radius
        if self.family == 'ellipse' and self.a == self.b:
            return self.center, self.a
        if self.family == 'star' and self.amplitude == 0.0:
            return self.center, self.base_radius
        return None

    def to_dict(self) -> Dict[str, object]:
        """Scene-file fragment for this spec."""
        pair = lambda z: [float(z.real), float(z.imag)]
        if self.family == 'circle':
            body = {'center': pair(self.center), 'radius': self.radius}
        elif self.family == 'ellipse':
            body = {'center': pair(self.center), 'a': self.a, 'b': self.b}
        elif self.family == 'star':
            body = {'center': pair(self.center), 'base_radius': self.base_radius,
                    'amplitude': self.amplitude, 'lobes': self.lobes}
        else:
            body = {'coefficients': [[m, *pair(c)] for m, c in zip(self.modes, self.coefficients)]}
        return {'family': self.family, **body}


def validate_spec(spec: ContourSpec) -> None:
    """
    Check the field invariants of a spec.

    Raises:
        DegenerateSpec: On any violated invariant
    """
    n = spec.nodes
    if n < MIN_NODES or n & (n - 1):
        raise DegenerateSpec(f"Node count must be a power of two >= {MIN_NODES}, got {n}")
    if spec.family not in FAMILIES:
        raise DegenerateSpec(f"Unknown contour family: {spec.family}. Available: {list(FAMILIES)}")
    if spec.family == 'circle' and not spec.radius > 0:
        raise DegenerateSpec(f"Circle radius must be positive, got {spec.radius}")
    if spec.family == 'ellipse' and not (spec.a > 0 and spec.b > 0):
        raise DegenerateSpec(f"Ellipse semi-axes must be positive, got a={spec.a}, b={spec.b}")
    if spec.family == 'star':
        if not spec.base_radius > 0:
            raise DegenerateSpec(f"Star base radius must be positive, got {spec.base_radius}")
        if not 0.0 <= spec.amplitude < 1.0:
            raise DegenerateSpec(f"Star amplitude must lie in [0, 1), got {spec.amplitude}")
        if int(spec.lobes) != spec.lobes or spec.lobes < 2:
            raise DegenerateSpec(f"Star lobes must be an integer >= 2, got {spec.lobes}")
    if spec.family == 'fourier':
        if len(spec.modes) == 0 or len(spec.modes) != len(spec.coefficients):
            raise DegenerateSpec("Fourier spec needs matching, non-empty modes and coefficients")
        if len(set(spec.modes)) != len(spec.modes):
            raise DegenerateSpec("Fourier modes must be distinct")
        if not all(np.isfinite(c) for c in spec.coefficients):
            raise DegenerateSpec("Fourier coefficients must be finite")


def curve_derivatives(spec: ContourSpec, t) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Position, first and second parameter derivatives of the curve at ``t``."""
    t = np.asarray(t, dtype=float)
    e = np.exp(1j * t)
    if spec.family == 'circle':
        r = spec.radius
        return spec.center + r * e, 1j * r * e, -r * e
    if spec.family == 'ellipse':
        a, b = spec.a, spec.b
        pos = spec.center + a * np.cos(t) + 1j * b * np.sin(t)
        vel = -a * np.sin(t) + 1j * b * np.cos(t)
        acc = -a * np.cos(t) - 1j * b * np.sin(t)
        return pos, vel, acc
    if spec.family == 'star':
        R, alpha, k = spec.base_radius, spec.amplitude, spec.lobes
        rho = R * (1.0 + alpha * np.cos(k * t))
        drho = -R * alpha * k * np.sin(k * t)
        ddrho = -R * alpha * k * k * np.cos(k * t)
        pos = spec.center + rho * e
        vel = (drho + 1j * rho) * e
        acc = (ddrho + 2j * drho - rho) * e
        return pos, vel, acc
    # fourier: exact trigonometric differentiation of the series
    modes = np.asarray(spec.modes, dtype=float)
    coeffs = np.asarray(spec.coefficients, dtype=complex)
    basis = np.exp(1j * np.multiply.outer(t, modes))
    pos = basis @ coeffs
    vel = basis @ (1j * modes * coeffs)
    acc = basis @ (-(modes ** 2) * coeffs)
    return pos, vel, acc


@dataclass(frozen=True, eq=False)
class Contour:
    """Nodes, velocities, outward normals, curvature and weights of a curve."""
    spec: ContourSpec
    t: np.ndarray
    points: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray
    normals: np.ndarray
    curvature: np.ndarray
    weights: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.points.size

    @property
    def tangents(self) -> np.ndarray:
        return self.velocity / np.abs(self.velocity)

    @property
    def dsigma(self) -> np.ndarray:
        """Complex quadrature weights w_j * T_j for integrals against d(sigma)."""
        return self.weights * self.tangents

    @property
    def length(self) -> float:
        return float(np.sum(self.weights))

    @cached_property
    def diameter(self) -> float:
        best = 0.0
        for start in range(0, self.n, 1024):
            block = self.points[start:start + 1024, None] - self.points[None, :]
            best = max(best, float(np.max(np.abs(block))))
        return best

    @cached_property
    def area(self) -> float:
        return float(0.5 * np.sum(self.weights * np.real(np.conj(self.points) * self.normals)))

    @cached_property
    def centroid(self) -> complex:
        x, y = self.points.real, self.points.imag
        mx = 0.5 * np.sum(self.weights * x * x * self.normals.real)
        my = 0.5 * np.sum(self.weights * y * y * self.normals.imag)
        return complex(mx, my) / self.area

    @property
    def standoff(self) -> float:
        """Minimum admissible distance of evaluation points from the nodes."""
        return 2.0 * np.pi * self.diameter / self.n

    def disk(self) -> Optional[Tuple[complex, float]]:
        return self.spec.disk()


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def make_contour(spec: ContourSpec, check_simple: bool = True) -> Contour:
    """
    Discretise a curve at ``spec.nodes`` uniform parameter nodes.

    Args:
        spec: Curve family and parameters
        check_simple: Run the self-intersection scan for fourier specs

    Returns:
        Immutable Contour

    Raises:
        DegenerateSpec: If the spec is invalid, the speed vanishes or the
            curve is negatively oriented
        SelfIntersecting: If a fourier curve crosses itself
    """
    validate_spec(spec)
    n = spec.nodes
    t = 2.0 * np.pi * np.arange(n) / n
    pos, vel, acc = curve_derivatives(spec, t)
    speed = np.abs(vel)
    if np.min(speed) <= 1e-14 * max(1.0, float(np.max(speed))):
        raise DegenerateSpec("Curve speed vanishes at a node")

    if spec.family == 'fourier' and check_simple:
        scan_t = 2.0 * np.pi * np.arange(SIMPLE_SCAN_FACTOR * n) / (SIMPLE_SCAN_FACTOR * n)
        scan, _, _ = curve_derivatives(spec, scan_t)
        if polyline_self_intersects(scan):
            raise SelfIntersecting(f"Fourier curve with {len(spec.modes)} modes is not simple")

    normals = -1j * vel / speed
    curvature = np.imag(acc * np.conj(vel)) / speed ** 3
    weights = speed * 2.0 * np.pi / n

    contour = Contour(
        spec=spec,
        t=_frozen(t),
        points=_frozen(pos),
        velocity=_frozen(vel),
        acceleration=_frozen(acc),
        normals=_frozen(normals),
        curvature=_frozen(curvature),
        weights=_frozen(weights),
    )
    if not contour.area > 0:
        raise DegenerateSpec(f"Curve is not positively oriented (signed area {contour.area:.3e})")
    logger.debug(f"Built {spec.family} contour: N={n}, length={contour.length:.6g}, area={contour.area:.6g}")
    return contour


@lru_cache(maxsize=16)
def refine(c: Contour, factor: int = REFINE_FACTOR) -> Contour:
    """Same curve sampled at ``factor`` times as many nodes (shares every node of ``c``)."""
    return make_contour(c.spec.with_nodes(c.n * factor), check_simple=False)


def winding_numbers(c: Contour, z) -> np.ndarray:
    """
    Winding numbers of the curve around each point of ``z``.

    Raises:
        TooCloseToBoundary: If any point is closer than the standoff to a node
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    dist = np.min(np.abs(z[:, None] - c.points[None, :]), axis=1)
    worst = int(np.argmin(dist))
    if dist[worst] < c.standoff:
        raise TooCloseToBoundary(
            f"Point {z[worst]:.6g} is {dist[worst]:.3e} from the boundary (standoff {c.standoff:.3e})",
            distance=float(dist[worst]),
            standoff=c.standoff,
        )
    raw = (c.dsigma[None, :] / (c.points[None, :] - z[:, None])).sum(axis=1) / (2j * np.pi)
    return np.rint(raw.real).astype(int)


def winding_number(c: Contour, z: complex) -> int:
    """Winding number of the curve around ``z``: 1 inside, 0 outside."""
    return int(winding_numbers(c, [z])[0])


def boundary_sup(phi) -> float:
    """Maximum modulus of boundary samples over the nodes."""
    return float(np.max(np.abs(phi.values)))


def trig_interpolate(values, factor: int) -> np.ndarray:
    """Trigonometric interpolation of periodic node values onto ``factor``-times finer nodes."""
    values = np.asarray(values, dtype=complex)
    n = values.size
    m = n * factor
    coeffs = np.fft.fft(values)
    padded = np.zeros(m, dtype=complex)
    half = n // 2
    padded[:half] = coeffs[:half]
    padded[m - half + 1:] = coeffs[half + 1:]
    # split the Nyquist mode symmetrically
    padded[half] = 0.5 * coeffs[half]
    padded[m - half] = 0.5 * coeffs[half]
    return np.fft.ifft(padded) * factor


def spectral_derivative(values) -> np.ndarray:
    """d/dt of periodic node values by FFT differentiation (Nyquist mode dropped)."""
    values = np.asarray(values, dtype=complex)
    n = values.size
    k = np.fft.fftfreq(n, d=1.0 / n)
    k[n // 2] = 0.0
    return np.fft.ifft(1j * k * np.fft.fft(values))


def support_function(c: Contour, thetas, factor: int = REFINE_FACTOR) -> np.ndarray:
    """max over the (refined) curve of Re(exp(-i theta) sigma) for each angle."""
    fine = refine(c, factor) if factor > 1 else c
    rot = np.exp(-1j * np.asarray(thetas, dtype=float))
    return np.max(np.real(rot[:, None] * fine.points[None, :]), axis=1)


def export_nodes_csv(c: Contour, path: Path) -> Path:
    """Write node data (t, x, y, normal, curvature, weight) with 17 significant digits."""
    path = Path(path)
    data = np.column_stack([
        c.t, c.points.real, c.points.imag, c.normals.real, c.normals.imag, c.curvature, c.weights,
    ])
    np.savetxt(path, data, fmt='%.17g', delimiter=',',
               header='t,x,y,normal_x,normal_y,curvature,weight', comments='')
    return path
