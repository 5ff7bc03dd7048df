"""
Mapping theorems for the analytic calculus on convex domains.

For W(A) inside a convex domain and ||f|| <= 1 on the boundary:
- K(f) = 0 gives W(gamma(f)) in the closed unit disk and ||gamma(f)|| <= 2;
- on disks, W(gamma(f)) sits in the teardrop around f(center);
- ||gamma(f)|| <= 2 + ||gamma(conj K(f))||, the quartic inequality
  ||g||^4 <= 2||g||^3 + ||gamma(f conj(K f) f)|| ||g||, and
  ||gamma(f)|| <= 2 ||(I + K)^-1 f||.
"""

import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, List, Mapping, NamedTuple, Optional, Sequence, Union

import numpy as np
from joblib import Parallel, delayed

from .calculus import (
    MatrixOperand,
    certify_operand,
    gamma_apply,
    nrange_inclusion,
    numerical_radius,
    random_operand_matrix,
    support_sweep,
)
from .cauchy import BoundarySamples, cauchy_interior
from .contour import Contour
from .dlayer import analytic_image, convexity_report, interior_solve
from .errors import BoundViolated, HypothesisViolated, ZeroFunction
from .generators import Polynomial, generator_sup, random_polynomial
from .linalg import spectral_norm
from .settings import tolerance

logger = logging.getLogger(__name__)

TEARDROP_ANGLES = 1440


@dataclass(frozen=True)
class MappingReport:
    kernel_residual: float
    numerical_radius: float
    okubo_norm: float
    crouzeix07_slack: float
    rs18_slack: float
    delyon_slack: float
    crouzeix_term: float
    teardrop_slack: Optional[float] = None


class CalcInequalities(NamedTuple):
    """Slacks (right side minus left side) of the norm inequalities."""
    crouzeix07_slack: float
    rs18_slack: float
    delyon_slack: float
    crouzeix_term: float


def normalize_unit_ball(c: Contour, p: Union[Polynomial, Sequence[complex]]) -> BoundarySamples:
    """
    Samples of p / sup|p| on the contour.

    Args:
        c: Contour
        p: Polynomial generator or ascending coefficients in powers of z

    Raises:
        ZeroFunction: If p vanishes identically
    """
    if not isinstance(p, Polynomial):
        p = Polynomial(tuple(p))
    if p.is_zero():
        raise ZeroFunction("Cannot normalise the zero polynomial")
    sup = generator_sup(c, p)
    return p.scaled(1.0 / sup).sample(c)


def _check_hypotheses(op: MatrixOperand, c: Contour, f: BoundarySamples, exact_sup: bool,
                      tolerances: Optional[Mapping[str, float]] = None) -> None:
    failed: List[str] = []
    if op.contour is not c:
        failed.append('operand certified on this contour')
    elif not convexity_report(c).is_convex:
        failed.append('convex domain')
    elif not nrange_inclusion(op, c, tolerance('inclusion_eig', tolerances),
                               tolerance('support', tolerances)).included:
        failed.append('numerical range inside domain')
    tol = tolerance('unit_sup', tolerances)
    # sup over the curve when the samples know their function, else over the nodes
    sup = generator_sup(c, f.generator) if f.generator is not None else f.sup
    if f.sup > 1.0 + tol or (exact_sup and abs(sup - 1.0) > tol) or sup > 1.0 + tol:
        failed.append(f'sup|f| {"="  if exact_sup else "<="} 1 (got {sup:.12g})')
    if not f.analytic:
        failed.append('f analytic inside the domain')
    if failed:
        raise HypothesisViolated(f"Hypotheses failed: {', '.join(failed)}", failed=failed)


def _assert_slack(check: str, slack: float, tol: float) -> None:
    if slack < -tol:
        raise BoundViolated(f"{check} violated with slack {slack:.3e}", check=check, slack=slack)


def _inequalities(op: MatrixOperand, c: Contour, f: BoundarySamples, G: np.ndarray,
                 tolerances: Optional[Mapping[str, float]] = None, check: bool = True) -> CalcInequalities:
    tol = tolerance('bound', tolerances)
    conj_Kf = analytic_image(c, f).Kf.conj()
    norm = spectral_norm(G)
    term = spectral_norm(gamma_apply(op, conj_Kf))
    triple = spectral_norm(gamma_apply(op, f * conj_Kf * f))
    psi = interior_solve(c, f.values)

    result = CalcInequalities(
        crouzeix07_slack=2.0 + term - norm,
        rs18_slack=2.0 * norm ** 3 + triple * norm - norm ** 4,
        delyon_slack=2.0 * float(np.max(np.abs(psi))) - norm,
        crouzeix_term=term,
    )
    if check:
        _assert_slack('crouzeix07', result.crouzeix07_slack, tol)
        _assert_slack('rs18', result.rs18_slack, tol)
        _assert_slack('delyon', result.delyon_slack, tol)
        _assert_slack('crouzeix_absolute', tolerance('crouzeix_absolute', tolerances) - term, tol)
    return result


def calc_inequalities(op: MatrixOperand, c: Contour, f: BoundarySamples,
                      tolerances: Optional[Mapping[str, float]] = None) -> CalcInequalities:
    """
    Check the three norm inequalities for gamma(f).

    Raises:
        HypothesisViolated: If convexity, inclusion, or sup|f| <= 1 fails
        BoundViolated: If any slack is below -1e-6
    """
    _check_hypotheses(op, c, f, exact_sup=False, tolerances=tolerances)
    return _inequalities(op, c, f, gamma_apply(op, f), tolerances)


def delyon_estimate(op: MatrixOperand, c: Contour, f: BoundarySamples,
                    tolerances: Optional[Mapping[str, float]] = None) -> float:
    """
    Slack of ||gamma(f)|| <= 2 ||(I + K)^-1 f|| on its own. Zero for f = 1.

    Raises:
        HypothesisViolated: If convexity, inclusion, or sup|f| <= 1 fails
        BoundViolated: If the slack is below -1e-6
    """
    _check_hypotheses(op, c, f, exact_sup=False, tolerances=tolerances)
    psi = interior_solve(c, f.values)
    slack = 2.0 * float(np.max(np.abs(psi))) - spectral_norm(gamma_apply(op, f))
    _assert_slack('delyon', slack, tolerance('bound', tolerances))
    return slack


def teardrop_support(center_value: complex, thetas) -> np.ndarray:
    """Support function of the hull of the unit disk and the disk around f(c) of radius 1 - |f(c)|^2."""
    thetas = np.asarray(thetas, dtype=float)
    lobe = np.real(np.exp(-1j * thetas) * center_value) + 1.0 - abs(center_value) ** 2
    return np.maximum(1.0, lobe)


def teardrop_boundary(center_value: complex, thetas) -> np.ndarray:
    """Support points of the teardrop region, one per angle."""
    thetas = np.asarray(thetas, dtype=float)
    radius = 1.0 - abs(center_value) ** 2
    lobe = np.real(np.exp(-1j * thetas) * center_value) + radius
    e = np.exp(1j * thetas)
    return np.where(lobe > 1.0, center_value + radius * e, e)


def _teardrop_slack(op: MatrixOperand, f: BoundarySamples, G: np.ndarray,
                    tolerances: Optional[Mapping[str, float]] = None, check: bool = True) -> float:
    c = op.contour
    center, _ = c.disk()
    fc = cauchy_interior(c, f, center)
    thetas = np.linspace(0.0, 2 * np.pi, TEARDROP_ANGLES, endpoint=False)
    slack = float(np.min(teardrop_support(fc, thetas) - support_sweep(G, thetas)))
    if check:
        _assert_slack('teardrop', slack, tolerance('mapping', tolerances))
    return slack


def drury_teardrop_verify(op: MatrixOperand, f: BoundarySamples,
                          tolerances: Optional[Mapping[str, float]] = None) -> float:
    """
    Slack of W(gamma(f)) inside the teardrop region on a disk domain.

    Raises:
        HypothesisViolated: If the contour is not a circle or the inclusion/norm hypotheses fail
        BoundViolated: If the slack is below -1e-6
    """
    c = op.contour
    if c.disk() is None:
        raise HypothesisViolated(f"Teardrop check needs a disk domain, got {c.spec.family}",
                                 failed=['disk domain'])
    _check_hypotheses(op, c, f, exact_sup=True, tolerances=tolerances)
    return _teardrop_slack(op, f, gamma_apply(op, f), tolerances)


def putinar_sandberg_verify(op: MatrixOperand, c: Contour, f: BoundarySamples,
                            tolerances: Optional[Mapping[str, float]] = None) -> MappingReport:
    """
    Mapping-theorem data for gamma(f).

    When K(f) vanishes numerically (residual <= the 'mapping' tolerance)
    asserts numerical radius <= 1, norm <= 2, the norm inequalities and,
    on disks, the teardrop. Otherwise every quantity is only reported;
    callers that know a bound still holds (Okubo on disks) check the rows.

    Raises:
        HypothesisViolated: Lists every failed precondition
        BoundViolated: On a violated conclusion
    """
    _check_hypotheses(op, c, f, exact_sup=True, tolerances=tolerances)
    tol = tolerance('mapping', tolerances)
    G = gamma_apply(op, f)
    kernel_residual = float(np.max(np.abs(analytic_image(c, f).Kf.values)))
    radius = numerical_radius(G)
    norm = spectral_norm(G)
    if radius < norm / 2.0 - 1e-9:
        raise BoundViolated(f"Numerical radius {radius:.12g} below half the norm {norm:.12g}",
                            check='radius_norm', slack=radius - norm / 2.0)

    kernel_free = kernel_residual <= tol
    if kernel_free:
        _assert_slack('putinar_sandberg', 1.0 - radius, tol)
        _assert_slack('okubo', 2.0 - norm, tol)
    else:
        logger.debug(f"K(f) residual {kernel_residual:.2e} on {c.spec.family}: mapping bounds reported only")

    inequalities = _inequalities(op, c, f, G, tolerances, check=kernel_free)
    teardrop = _teardrop_slack(op, f, G, tolerances, check=kernel_free) if c.disk() is not None else None
    return MappingReport(
        kernel_residual=kernel_residual,
        numerical_radius=radius,
        okubo_norm=norm,
        teardrop_slack=teardrop,
        **inequalities._asdict(),
    )


ENSEMBLE_COLUMNS = (
    'trial', 'seed', 'dim', 'degree', 'kernel_residual', 'numerical_radius', 'okubo_norm',
    'teardrop_slack', 'crouzeix07_slack', 'rs18_slack', 'delyon_slack', 'crouzeix_term',
)


def _mapping_trial(c: Contour, trial: int, child: np.random.SeedSequence, dim: int, degree: int,
                   scale_fraction: float, vanish_at_center: bool,
                   tolerances: Optional[Mapping[str, float]]) -> Dict[str, float]:
    rng = np.random.default_rng(child)
    op = certify_operand(random_operand_matrix(c, dim, rng, scale_fraction), c,
                         tol=tolerance('integer_count', tolerances))
    center = c.disk()[0] if c.disk() is not None else c.centroid
    p = random_polynomial(rng, degree, center=center, vanish_at_center=vanish_at_center)
    report = putinar_sandberg_verify(op, c, normalize_unit_ball(c, p), tolerances)
    row = {'trial': trial, 'seed': int(child.generate_state(1)[0]), 'dim': dim, 'degree': degree}
    row.update(asdict(report))
    return row


def run_mapping_ensemble(
    c: Contour,
    trials: int,
    dim: int,
    degree: int,
    seed: Union[int, np.random.SeedSequence],
    scale_fraction: float = 0.9,
    vanish_at_center: bool = False,
    n_jobs: int = 1,
    tolerances: Optional[Mapping[str, float]] = None,
) -> List[Dict[str, float]]:
    """
    Independent mapping trials with per-trial seeds split from ``seed``.

    Rows come back in trial order for any ``n_jobs``.
    """
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = root.spawn(trials)
    rows = Parallel(n_jobs=n_jobs)(
        delayed(_mapping_trial)(c, k, child, dim, degree, scale_fraction, vanish_at_center, tolerances)
        for k, child in enumerate(children)
    )
    logger.info(f"Mapping ensemble on {c.spec.family}: {trials} trials, dim={dim}, degree={degree}")
    return list(rows)


def write_ensemble_csv(rows: Sequence[Dict[str, float]], path: Path) -> Path:
    """Ensemble table, one row per trial; missing teardrop slacks are written as nan."""
    path = Path(path)
    data = np.array([[np.nan if row[k] is None else row[k] for k in ENSEMBLE_COLUMNS] for row in rows], dtype=float)
    np.savetxt(path, data.reshape(-1, len(ENSEMBLE_COLUMNS)), fmt='%.17g', delimiter=',',
               header=','.join(ENSEMBLE_COLUMNS), comments='')
    return path
