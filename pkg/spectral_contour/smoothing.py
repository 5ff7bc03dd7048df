"""
Smooth nested domains around a compact set, and spectral-constant stability.

Level n takes dist(N_{n+1}, z) = max(dist(X, z) - eps/(n+1), 0), mollifies it
with the standard bump of radius s_n, extracts the sublevel boundary
{psi_n = t_n} by marching squares and fits each closed loop with a
truncated Fourier series. With s_n, t_n inside (0, (eps/n - eps/(n+1))/2)
the domains are nested, contain X and shrink onto it.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from scipy.signal import fftconvolve
from scipy.spatial import ConvexHull, QhullError, cKDTree

from .calculus import contour_gamma, count_from_stack, resolvent_stack
from .contour import Contour, ContourSpec, make_contour, winding_numbers
from .errors import (
    GridTooCoarse,
    HypothesisViolated,
    LevelNotRegular,
    NestingViolated,
    SpectralContourError,
)
from .generators import Polynomial, generator_sup
from .geometry import distance_to_segments, points_in_polygon
from .linalg import as_cmatrix, spectral_norm
from .settings import DEFAULT_TOLERANCES, tolerance

logger = logging.getLogger(__name__)

NUDGES = (0.0, 0.05, -0.05, 0.1, -0.1)
MAX_DAMPING_STEPS = 60
HULL_EDGE_SAMPLES = 256
TAIL_FRACTION = 0.05


@dataclass(frozen=True, eq=False)
class PointSet:
    """Finite set X; in hull mode X stands for its convex hull."""
    points: np.ndarray
    convex_hull_mode: bool = False

    def __post_init__(self):
        pts = np.atleast_1d(np.asarray(self.points, dtype=complex))
        if pts.size == 0:
            raise ValueError("PointSet needs at least one point")
        if not np.all(np.isfinite(pts)):
            raise ValueError("PointSet points must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, 'points', pts)

    @property
    def hull(self) -> np.ndarray:
        """Counter-clockwise hull vertices (two endpoints for collinear sets, one point for a singleton)."""
        pts = np.unique(self.points)
        if pts.size == 1:
            return pts
        try:
            hull = ConvexHull(np.column_stack([pts.real, pts.imag]))
            return pts[hull.vertices]
        except QhullError:
            direction = pts[-1] - pts[0]
            proj = np.real(pts * np.conj(direction))
            return np.array([pts[np.argmin(proj)], pts[np.argmax(proj)]])

    def boundary_samples(self) -> np.ndarray:
        """Fine sampling of the boundary of X (the points themselves, or the hull edges)."""
        if not self.convex_hull_mode:
            return self.points
        v = self.hull
        if v.size == 1:
            return v
        s = np.linspace(0.0, 1.0, HULL_EDGE_SAMPLES, endpoint=False)
        w = np.roll(v, -1)
        return (v[:, None] + s[None, :] * (w - v)[:, None]).ravel()


@dataclass(frozen=True)
class SmoothingParams:
    """
    Parameters of the level construction.

    s_n = s_fraction * gap_n with gap_n = (eps/n - eps/(n+1)) / 2; t_n starts at
    the midpoint of (s_n, gap_n). ``kappa`` is an optional candidate spectral
    constant checked level by level.
    """
    epsilon: float
    levels: int
    h: float
    modes: int = 32
    nodes: int = 256
    s_fraction: float = 0.5
    kappa: Optional[float] = None

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.levels < 1:
            raise ValueError(f"levels must be >= 1, got {self.levels}")
        if not 0.0 < self.s_fraction < 1.0:
            raise ValueError(f"s_fraction must lie in (0, 1), got {self.s_fraction}")
        if self.modes < 4:
            raise ValueError(f"modes must be >= 4, got {self.modes}")
        if not 0 < self.h <= self.s(1) / 4.0:
            raise ValueError(f"grid step h={self.h} must lie in (0, s_1/4 = {self.s(1) / 4.0:.6g}]")

    def gap(self, n: int) -> float:
        return 0.5 * (self.epsilon / n - self.epsilon / (n + 1))

    def s(self, n: int) -> float:
        return self.s_fraction * self.gap(n)

    def t_candidates(self, n: int) -> List[float]:
        lo, hi = self.s(n), self.gap(n)
        mid = 0.5 * (lo + hi)
        return [mid + k * (hi - lo) for k in NUDGES]


@dataclass(frozen=True, eq=False)
class Grid:
    x: np.ndarray
    y: np.ndarray
    h: float

    @property
    def points(self) -> np.ndarray:
        """Complex grid, shape (len(y), len(x)), row index = y."""
        X, Y = np.meshgrid(self.x, self.y)
        return X + 1j * Y


def make_grid(X: PointSet, p: SmoothingParams) -> Grid:
    """Grid of step h covering X padded by 2 eps."""
    pad = 2.0 * p.epsilon
    pts = X.points
    x = np.arange(pts.real.min() - pad, pts.real.max() + pad + p.h, p.h)
    y = np.arange(pts.imag.min() - pad, pts.imag.max() + pad + p.h, p.h)
    return Grid(x=x, y=y, h=p.h)


def distance_field(X: PointSet, grid) -> np.ndarray:
    """
    Euclidean distance to X on the grid (to the hull of X in hull mode).

    Args:
        X: Point set
        grid: Grid, or any array of complex points
    """
    z = grid.points if isinstance(grid, Grid) else np.asarray(grid, dtype=complex)
    if X.convex_hull_mode and X.hull.size > 1:
        v = X.hull
        dist = distance_to_segments(z, v, np.roll(v, -1))
        if v.size > 2:
            dist = np.where(points_in_polygon(z, v), 0.0, dist)
        return dist
    tree = cKDTree(np.column_stack([X.points.real, X.points.imag]))
    dist, _ = tree.query(np.column_stack([z.real.ravel(), z.imag.ravel()]))
    return dist.reshape(z.shape)


def mollifier(s: float, h: float) -> np.ndarray:
    """Standard bump exp(-1/(1 - r^2)) of radius s sampled at step h, unit mass on the grid."""
    k = int(np.ceil(s / h))
    if k == 0:
        return np.ones((1, 1))
    i = np.arange(-k, k + 1)
    r2 = (h * h * (i[:, None] ** 2 + i[None, :] ** 2)) / (s * s)
    safe = np.where(r2 < 1.0, r2, 0.0)
    kernel = np.where(r2 < 1.0, np.exp(-1.0 / (1.0 - safe)), 0.0)
    return kernel / kernel.sum()


def mollify(field_: np.ndarray, s: float, h: float) -> np.ndarray:
    """Convolution with the mollifier, edge-padded so the output keeps the grid shape."""
    kernel = mollifier(s, h)
    k = kernel.shape[0] // 2
    if k == 0:
        return np.array(field_, dtype=float)
    padded = np.pad(field_, k, mode='edge')
    return fftconvolve(padded, kernel, mode='valid')


def _edge_point(grid: Grid, F: np.ndarray, level: float, edge: int) -> complex:
    ny, nx = F.shape
    n_h = ny * (nx - 1)
    if edge < n_h:
        iy, ix = divmod(edge, nx - 1)
        a, b = (iy, ix), (iy, ix + 1)
    else:
        iy, ix = divmod(edge - n_h, nx)
        a, b = (iy, ix), (iy + 1, ix)
    fa, fb = F[a], F[b]
    lam = (level - fa) / (fb - fa)
    za = complex(grid.x[a[1]], grid.y[a[0]])
    zb = complex(grid.x[b[1]], grid.y[b[0]])
    return za + lam * (zb - za)


def marching_squares(grid: Grid, F: np.ndarray, level: float) -> List[np.ndarray]:
    """
    Closed loops of {F = level}, each counter-clockwise.

    Segments are linked through shared grid-edge ids; saddle cells are split
    by the cell-centre average.

    Raises:
        GridTooCoarse: If a loop is open (runs off the grid)
    """
    ny, nx = F.shape
    inside = (F < level).astype(int)
    n_h = ny * (nx - 1)

    def h_edge(iy, ix):
        return iy * (nx - 1) + ix

    def v_edge(iy, ix):
        return n_h + iy * nx + ix

    code = (inside[:-1, :-1] | (inside[:-1, 1:] << 1)
            | (inside[1:, 1:] << 2) | (inside[1:, :-1] << 3))
    neighbours: Dict[int, List[int]] = {}

    def link(e1: int, e2: int) -> None:
        neighbours.setdefault(e1, []).append(e2)
        neighbours.setdefault(e2, []).append(e1)

    for iy, ix in zip(*np.nonzero((code != 0) & (code != 15))):
        bottom, top = h_edge(iy, ix), h_edge(iy + 1, ix)
        left, right = v_edge(iy, ix), v_edge(iy, ix + 1)
        c = code[iy, ix]
        crossing = []
        # corners a=(iy,ix) b=(iy,ix+1) c=(iy+1,ix+1) d=(iy+1,ix); edges in order ab, bc, dc, ad
        for edge, (bit1, bit2) in ((bottom, (0, 1)), (right, (1, 2)), (top, (3, 2)), (left, (0, 3))):
            if ((c >> bit1) & 1) != ((c >> bit2) & 1):
                crossing.append(edge)
        if len(crossing) == 2:
            link(*crossing)
            continue
        centre_inside = F[iy:iy + 2, ix:ix + 2].mean() < level
        a_inside = bool(c & 1)
        if a_inside == centre_inside:
            link(bottom, right)
            link(top, left)
        else:
            link(left, bottom)
            link(right, top)

    loops: List[np.ndarray] = []
    seen = set()
    for start in neighbours:
        if start in seen:
            continue
        if len(neighbours[start]) != 2:
            raise GridTooCoarse(f"Level {level:.6g} has an open or branching curve at grid edge {start}")
        chain = [start]
        seen.add(start)
        prev, cur = start, neighbours[start][0]
        while cur != start:
            if len(neighbours[cur]) != 2:
                raise GridTooCoarse(f"Level {level:.6g} has an open or branching curve at grid edge {cur}")
            chain.append(cur)
            seen.add(cur)
            a, b = neighbours[cur]
            prev, cur = cur, (b if a == prev else a)
        poly = np.array([_edge_point(grid, F, level, e) for e in chain])
        signed = 0.5 * np.sum(np.imag(np.conj(poly) * np.roll(poly, -1)))
        loops.append(poly if signed > 0 else poly[::-1])
    return loops


def fit_fourier(poly: np.ndarray, modes: int) -> Tuple[np.ndarray, np.ndarray, float]:
    """
    Least-squares Fourier series through a closed polyline, parametrised by arclength.

    Returns:
        (mode numbers, coefficients, max residual at the polyline vertices)
    """
    seg = np.abs(np.roll(poly, -1) - poly)
    t = 2.0 * np.pi * np.concatenate([[0.0], np.cumsum(seg)[:-1]]) / seg.sum()
    m = np.arange(-(modes // 2), modes // 2)
    basis = np.exp(1j * np.multiply.outer(t, m))
    coeffs, *_ = np.linalg.lstsq(basis, poly, rcond=None)
    residual = float(np.max(np.abs(basis @ coeffs - poly)))
    return m, coeffs, residual


@dataclass(frozen=True, eq=False)
class SmoothDomain:
    """One level: its parameters and the fitted boundary components."""
    level: int
    t: float
    s: float
    components: Tuple[Contour, ...]
    fit_residual: float
    damping: float = 0.0
    min_gradient: float = field(default=np.nan, repr=False)

    def scene_fragments(self) -> List[dict]:
        return [c.spec.to_dict() for c in self.components]


def _fit_component(poly: np.ndarray, p: SmoothingParams, convex: bool,
                   curv_tol: float = DEFAULT_TOLERANCES['fit_curvature']) -> Tuple[Contour, float, float]:
    m, coeffs, residual = fit_fourier(poly, p.modes)
    damping = 0.0
    contour = make_contour(ContourSpec.fourier(m, coeffs, nodes=p.nodes))
    if convex:
        tau = 1e-5
        steps = 0
        # heat-kernel damping of the high modes until the fit is convex; modes 0 and +-1 untouched
        while np.min(contour.curvature) < -curv_tol:
            if steps == MAX_DAMPING_STEPS:
                raise GridTooCoarse(f"Fitted level stays non-convex after damping tau={tau:.3g}")
            damping = tau
            damped = coeffs * np.exp(-np.maximum(m * m - 1, 0) * tau)
            contour = make_contour(ContourSpec.fourier(m, damped, nodes=p.nodes))
            tau *= 2.0
            steps += 1
    return contour, residual, damping


def _min_gradient(F: np.ndarray, h: float, level: float) -> float:
    gy, gx = np.gradient(F, h)
    grad = np.hypot(gx, gy)
    inside = F < level
    band = np.zeros_like(inside)
    band[:-1, :] |= inside[:-1, :] != inside[1:, :]
    band[1:, :] |= inside[:-1, :] != inside[1:, :]
    band[:, :-1] |= inside[:, :-1] != inside[:, 1:]
    band[:, 1:] |= inside[:, :-1] != inside[:, 1:]
    return float(np.min(grad[band])) if band.any() else np.nan


def build_level(X: PointSet, p: SmoothingParams, grid: Grid, dist: np.ndarray, n: int,
                tolerances: Optional[Mapping[str, float]] = None) -> SmoothDomain:
    """
    Extract and fit level n.

    Raises:
        LevelNotRegular: If no admissible t_n passes the gradient floor
        GridTooCoarse: On open loops or loops enclosing no point of X
    """
    s = p.s(n)
    psi = mollify(np.maximum(dist - p.epsilon / (n + 1), 0.0), s, grid.h)
    for t in p.t_candidates(n):
        floor = t / (4.0 * s)
        min_grad = _min_gradient(psi, grid.h, t)
        if not min_grad >= floor:
            logger.debug(f"Level {n}: t={t:.6g} fails gradient floor ({min_grad:.3g} < {floor:.3g})")
            continue
        components, residuals, dampings = [], [], []
        for poly in marching_squares(grid, psi, t):
            contour, residual, damping = _fit_component(poly, p, X.convex_hull_mode,
                                                        tolerance('fit_curvature', tolerances))
            try:
                encloses = np.any(winding_numbers(contour, X.points) == 1)
            except SpectralContourError:
                encloses = False
            if not encloses:
                raise GridTooCoarse(f"Level {n} has a loop enclosing no point of X (hole or stray loop)")
            components.append(contour)
            residuals.append(residual)
            dampings.append(damping)
        if not components:
            raise GridTooCoarse(f"Level {n} produced no closed loop")
        domain = SmoothDomain(level=n, t=t, s=s, components=tuple(components),
                              fit_residual=max(residuals), damping=max(dampings), min_gradient=min_grad)
        logger.info(f"Level {n}: t={t:.6g}, s={s:.6g}, {len(components)} component(s), "
                    f"fit residual {domain.fit_residual:.2e}")
        return domain
    raise LevelNotRegular(f"No regular value found for level {n} in ({s:.6g}, {p.gap(n):.6g})")


def build_domains(X: PointSet, p: SmoothingParams, n_jobs: int = 1,
                  tolerances: Optional[Mapping[str, float]] = None) -> List[SmoothDomain]:
    """Levels 1..p.levels, built in parallel and returned in level order."""
    grid = make_grid(X, p)
    dist = distance_field(X, grid)
    logger.info(f"Distance field on {grid.y.size}x{grid.x.size} grid (h={grid.h:.4g})")
    return list(Parallel(n_jobs=n_jobs)(
        delayed(build_level)(X, p, grid, dist, n, tolerances) for n in range(1, p.levels + 1)
    ))


def _inside_domain(domain: SmoothDomain, z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    inside = np.zeros(z.shape, dtype=bool)
    for c in domain.components:
        inside |= points_in_polygon(z, c.points)
    return inside


@dataclass(frozen=True)
class LevelCheck:
    level: int
    x_inside: bool
    nested: Optional[bool]
    hausdorff: float
    hausdorff_bound: float
    convex: Optional[bool]


def nesting_report(domains: Sequence[SmoothDomain], X: PointSet, p: SmoothingParams,
                   tolerances: Optional[Mapping[str, float]] = None) -> List[LevelCheck]:
    """
    Check containment of X, nesting, the Hausdorff bound and (hull mode) convexity.

    Raises:
        NestingViolated: On the first failed check, with its level
    """
    if len(domains) < 2:
        raise ValueError("nesting_report needs at least two levels")
    grid = make_grid(X, p)
    z = grid.points.ravel()
    curv_tol = tolerance('fit_curvature', tolerances)
    checks: List[LevelCheck] = []
    for k, domain in enumerate(domains):
        n = domain.level
        try:
            counts = sum(winding_numbers(c, X.points) for c in domain.components)
            x_inside = bool(np.all(counts == 1))
        except SpectralContourError:
            x_inside = False
        if not x_inside:
            raise NestingViolated(f"Level {n}: X is not strictly inside", level=n)

        nested = None
        if k + 1 < len(domains):
            inner = domains[k + 1]
            inner_nodes = np.concatenate([c.points for c in inner.components])
            nested = bool(np.all(_inside_domain(domain, inner_nodes))
                          and np.all(_inside_domain(domain, z[_inside_domain(inner, z)])))
            if not nested:
                raise NestingViolated(f"Level {inner.level} is not inside level {n}", level=n)

        nodes = np.concatenate([c.points for c in domain.components])
        covered = np.concatenate([nodes, z[_inside_domain(domain, z)]])
        hausdorff = float(np.max(distance_field(X, covered)))
        bound = p.epsilon / n + 2.0 * p.h
        if hausdorff > bound:
            raise NestingViolated(f"Level {n}: Hausdorff distance {hausdorff:.6g} exceeds {bound:.6g}", level=n)

        convex = None
        if X.convex_hull_mode:
            convex = len(domain.components) == 1 and float(np.min(domain.components[0].curvature)) >= -curv_tol
            if not convex:
                raise NestingViolated(f"Level {n} is not convex in hull mode", level=n)
        checks.append(LevelCheck(n, x_inside, nested, hausdorff, bound, convex))
    logger.info(f"Nesting report: {len(checks)} levels pass")
    return checks


@dataclass(frozen=True)
class StabilityRow:
    level: int
    sup: float
    norm: float
    ratio: float
    homomorphism_error: float
    within_kappa: Optional[bool] = None


@dataclass(frozen=True)
class StabilityReport:
    rows: Tuple[StabilityRow, ...]
    sup_x: float
    limit_ratio: float
    extrapolated_ratio: float
    first_kappa_violation: Optional[int] = None
    # last sup against sup over X, allowed TAIL_FRACTION of the first-to-last drop
    tail_excess: float = np.nan
    tail_allowance: float = np.nan
    tail_within: Optional[bool] = None


def _extrapolate(levels: np.ndarray, values: np.ndarray) -> float:
    # polynomial in 1/n through the last three levels, evaluated at 1/n = 0
    x = 1.0 / levels[-3:]
    y = values[-3:]
    if x.size == 1:
        return float(y[0])
    return float(np.polyval(np.polyfit(x, y, x.size - 1), 0.0))


def spectral_stability(
    A,
    f: Polynomial,
    domains: Sequence[SmoothDomain],
    X: PointSet,
    p: Optional[SmoothingParams] = None,
    kappa: Optional[float] = None,
    tolerances: Optional[Mapping[str, float]] = None,
) -> StabilityReport:
    """
    Table of (n, sup over the level boundary of |f|, ||f(A)||, ratio).

    Asserts the sups are non-increasing, each sup exceeds sup over X by at
    most L * (eps/n + 2h) with L = sup |f'| near X, and gamma over each level
    reproduces f(A) to 1e-6.

    Raises:
        HypothesisViolated: If an eigenvalue is outside a level or an assertion fails
    """
    M = as_cmatrix(A)
    fA = f.matrix_value(M)
    norm = spectral_norm(fA)
    hom_tol = tolerance('homomorphism', tolerances)
    count_tol = tolerance('integer_count', tolerances)
    kappa = kappa if kappa is not None else (p.kappa if p is not None else None)

    rows: List[StabilityRow] = []
    for domain in domains:
        count = 0
        G = np.zeros_like(fA)
        for c in domain.components:
            stack = resolvent_stack(M, c)
            count += count_from_stack(stack, c, count_tol)
            G += contour_gamma(stack, c, f(c.points))
        if count != M.shape[0]:
            raise HypothesisViolated(f"Level {domain.level} encloses {count} of {M.shape[0]} eigenvalues",
                                     failed=['spectrum inside every level'])
        err = float(np.linalg.norm(G - fA, 2))
        if err > hom_tol:
            raise HypothesisViolated(f"Level {domain.level}: gamma(f) differs from f(A) by {err:.3e}",
                                     failed=['homomorphism'])
        sup = max(generator_sup(c, f) for c in domain.components)
        ratio = norm / sup if sup > 0 else np.inf
        within = None if kappa is None else bool(ratio <= kappa + 1e-9)
        rows.append(StabilityRow(domain.level, sup, norm, ratio, err, within))

    sups = np.array([r.sup for r in rows])
    if np.any(np.diff(sups) > 1e-9):
        raise HypothesisViolated("Level sups are not non-increasing", failed=['monotone sup'])

    sup_x = float(np.max(np.abs(f(X.boundary_samples()))))
    if p is not None:
        grid = make_grid(X, p)
        z = grid.points
        near = distance_field(X, grid) <= p.epsilon
        lipschitz = float(np.max(np.abs(f.derivative(z[near])))) if near.any() else 0.0
        for r in rows:
            excess = r.sup - sup_x
            limit = lipschitz * (p.epsilon / r.level + 2.0 * p.h)
            if not -1e-9 <= excess <= limit + 1e-9:
                raise HypothesisViolated(
                    f"Level {r.level}: sup excess {excess:.3e} outside [0, {limit:.3e}]", failed=['sup convergence'])

    levels = np.array([r.level for r in rows], dtype=float)
    extrapolated_sup = _extrapolate(levels, sups)
    violations = [r.level for r in rows if r.within_kappa is False]
    tail_excess = float(sups[-1] - sup_x)
    tail_allowance = float(TAIL_FRACTION * (sups[0] - sups[-1]) + 1e-9)
    report = StabilityReport(
        rows=tuple(rows),
        sup_x=sup_x,
        limit_ratio=norm / sup_x if sup_x > 0 else np.inf,
        extrapolated_ratio=norm / extrapolated_sup if extrapolated_sup > 0 else np.inf,
        first_kappa_violation=violations[0] if violations else None,
        tail_excess=tail_excess,
        tail_allowance=tail_allowance,
        tail_within=bool(tail_excess <= tail_allowance),
    )
    logger.info(f"Spectral stability: ratios {[round(r.ratio, 6) for r in rows]}, "
                f"extrapolated {report.extrapolated_ratio:.6f}")
    return report


def write_field_csv(grid: Grid, values: np.ndarray, path: Path) -> Path:
    """Grid field as x, y, value rows."""
    path = Path(path)
    z = grid.points.ravel()
    data = np.column_stack([z.real, z.imag, np.asarray(values, dtype=float).ravel()])
    np.savetxt(path, data, fmt='%.17g', delimiter=',', header='x,y,value', comments='')
    return path
