"""
Double-layer potential and the Nystrom Neumann-Poincare matrix.

K[i, j] = w_j * P(sigma_j, sigma_i) with P(sigma, z) = Re(n(sigma) / (sigma - z)) / pi;
the diagonal uses the continuous limit kappa_i / (2 pi) along the curve, so
rows sum to one (discrete K(1) = 1).
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
import scipy.linalg

from .cauchy import BoundarySamples, cauchy_interior, one_sided_limits, singular_transform
from .contour import Contour, winding_numbers
from .errors import InconsistentClassification, RegionMismatch, SingularMatrix, SingularOperator
from .linalg import lu_factor
from .settings import DEFAULT_TOLERANCES

logger = logging.getLogger(__name__)

Region = Union[str, int]


@dataclass(frozen=True, eq=False)
class NPMatrix:
    """Nystrom matrix of the Neumann-Poincare operator on a contour."""
    contour: Contour
    entries: np.ndarray

    def apply(self, values) -> np.ndarray:
        return self.entries @ np.asarray(values, dtype=complex)

    @property
    def row_sums(self) -> np.ndarray:
        return self.entries.sum(axis=1)

    def export_csv(self, path: Path) -> Path:
        """Row-major dump with 17 significant digits and a column header."""
        path = Path(path)
        header = ','.join(f'k{j}' for j in range(self.contour.n))
        np.savetxt(path, self.entries, fmt='%.17g', delimiter=',', header=header, comments='')
        return path


def dl_kernel(c: Contour, j: int, z: complex) -> float:
    """P(sigma_j, z); at z == sigma_j the curvature limit kappa_j / (2 pi)."""
    sigma = c.points[j]
    if z == sigma:
        return float(c.curvature[j] / (2.0 * np.pi))
    return float(np.real(c.normals[j] / (sigma - z)) / np.pi)


def kernel_matrix(c: Contour) -> np.ndarray:
    """P(sigma_j, sigma_i) for all node pairs, diagonal = curvature limit."""
    diff = c.points[None, :] - c.points[:, None]
    np.fill_diagonal(diff, 1.0)
    P = np.real(c.normals[None, :] / diff) / np.pi
    np.fill_diagonal(P, c.curvature / (2.0 * np.pi))
    return P


@lru_cache(maxsize=16)
def np_matrix(c: Contour) -> NPMatrix:
    """Assemble the Nystrom matrix (cached per contour)."""
    entries = kernel_matrix(c) * c.weights[None, :]
    entries.setflags(write=False)
    K = NPMatrix(contour=c, entries=entries)
    logger.info(f"Assembled NP matrix on {c.spec.family} contour (N={c.n}), "
                f"max row-sum deviation {np.max(np.abs(K.row_sums - 1.0)):.2e}")
    return K


def dl_evaluate(c: Contour, phi: BoundarySamples, z: complex, region: Region) -> complex:
    """
    Double-layer potential of ``phi``.

    Args:
        region: 'interior' or 'exterior' (z off the curve), or a node index
            for the boundary value K(phi)(sigma_i)

    Raises:
        TooCloseToBoundary: If z violates the standoff rule
        RegionMismatch: If ``region`` disagrees with the winding number
    """
    if isinstance(region, (int, np.integer)) and not isinstance(region, bool):
        return complex(np_matrix(c).apply(phi.values)[int(region)])
    expected = {'interior': 1, 'exterior': 0}
    if region not in expected:
        raise ValueError(f"Unknown region: {region}. Use 'interior', 'exterior' or a node index")
    wn = int(winding_numbers(c, [z])[0])
    if wn != expected[region]:
        raise RegionMismatch(f"Point {z} has winding number {wn}, not {region}")
    diff = c.points - z
    pot = np.real(c.normals / diff) / np.pi
    return complex(np.sum(c.weights * phi.values * pot))


def np_norm(c: Contour) -> float:
    """Max absolute row sum of the Nystrom matrix."""
    return float(np.max(np.abs(np_matrix(c).entries).sum(axis=1)))


@dataclass(frozen=True)
class ConvexityReport:
    is_convex: bool
    min_kernel: float
    np_norm: float
    min_curvature: float


@lru_cache(maxsize=16)
def convexity_report(
    c: Contour,
    kernel_tol: float = DEFAULT_TOLERANCES['kernel_sign'],
    norm_tol: float = DEFAULT_TOLERANCES['np_norm'],
    curvature_tol: float = DEFAULT_TOLERANCES['curvature_sign'],
) -> ConvexityReport:
    """
    Classify the domain as convex by kernel sign, NP norm and curvature sign.

    Raises:
        InconsistentClassification: If the three classifiers disagree
    """
    P = kernel_matrix(c)
    np.fill_diagonal(P, np.inf)
    min_kernel = float(np.min(P))
    norm = np_norm(c)
    min_curv = float(np.min(c.curvature))
    verdicts = {
        'kernel': min_kernel >= -kernel_tol,
        'np_norm': norm <= 1.0 + norm_tol,
        'curvature': min_curv >= -curvature_tol,
    }
    if len(set(verdicts.values())) != 1:
        raise InconsistentClassification(
            f"Convexity classifiers disagree on {c.spec.family} (N={c.n}): {verdicts}; "
            f"min_kernel={min_kernel:.3e}, np_norm={norm:.9f}, min_curvature={min_curv:.3e}",
            verdicts=verdicts,
        )
    report = ConvexityReport(verdicts['kernel'], min_kernel, norm, min_curv)
    logger.info(f"Convexity of {c.spec.family} (N={c.n}): {report}")
    return report


@dataclass(frozen=True)
class AnalyticImage:
    """K(f) for analytic f, with the anti-analytic cross-check."""
    Kf: BoundarySamples
    antianalytic_residual: float
    disk_residual: Optional[float] = None
    center_value: Optional[complex] = None


def analytic_image(c: Contour, f: BoundarySamples) -> AnalyticImage:
    """
    Apply K to samples of an analytic function.

    The result is compared with conj(Phi(conj f) + conj(f)/2), the boundary
    value of the interior Cauchy transform of conj(f), conjugated. On circles
    K(f) is also compared with the constant f(center).
    """
    Kf = np_matrix(c).apply(f.values)
    fbar = f.conj()
    route = np.conj(singular_transform(c, fbar) + 0.5 * fbar.values)
    residual = float(np.max(np.abs(Kf - route)))

    disk_residual = None
    center_value = None
    disk = c.disk()
    if disk is not None:
        center_value = cauchy_interior(c, f, disk[0])
        disk_residual = float(np.max(np.abs(Kf - center_value)))

    return AnalyticImage(
        Kf=BoundarySamples(contour=c, values=Kf),
        antianalytic_residual=residual,
        disk_residual=disk_residual,
        center_value=center_value,
    )


@lru_cache(maxsize=16)
def _interior_lu(c: Contour) -> Tuple[np.ndarray, np.ndarray]:
    M = np.eye(c.n) + np_matrix(c).entries
    try:
        return lu_factor(M)
    except SingularMatrix as exc:
        raise SingularOperator(f"I + K is singular on {c.spec.family} (N={c.n})") from exc


def interior_solve(c: Contour, values) -> np.ndarray:
    """Solve (I + K) psi = values."""
    return scipy.linalg.lu_solve(_interior_lu(c), np.asarray(values, dtype=complex), check_finite=False)


def delyon_bound(c: Contour) -> float:
    """(3 + (2 pi d^2 / a)^3) / 2 from the diameter and area."""
    return 0.5 * (3.0 + (2.0 * np.pi * c.diameter ** 2 / c.area) ** 3)


@dataclass(frozen=True)
class InverseNorm:
    inv_norm: float
    delyon_bound: float


def interior_inverse_norm(c: Contour) -> InverseNorm:
    """
    Infinity norm of (I + K)^-1 next to the diameter/area bound.

    Raises:
        SingularOperator: If I + K fails the pivot certificate
    """
    inverse = interior_solve(c, np.eye(c.n))
    inv_norm = float(np.max(np.abs(inverse).sum(axis=1)))
    result = InverseNorm(inv_norm=inv_norm, delyon_bound=delyon_bound(c))
    logger.info(f"Interior inverse norm on {c.spec.family}: {result.inv_norm:.6f} (bound {result.delyon_bound:.6g})")
    return result


def dl_jump_residual(c: Contour, phi: BoundarySamples) -> float:
    """max |D_int - D_ext - 2 phi| over the nodes, relative to max(1, sup|phi|)."""
    inner, outer = one_sided_limits(c, phi, kernel='dlayer')
    return float(np.max(np.abs(inner - outer - 2.0 * phi.values))) / max(1.0, phi.sup)
