"""
Extremal-pair search and the spectral-constant bounds built on it.

gamma is linear in the polynomial coefficients, so the search precomputes
gamma((z - c)^k) once and maximises ||sum a_k Gamma_k|| / sup|p| with
Nelder-Mead from a few deterministic starts and seeded random restarts.
"""

import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Mapping, Optional, Tuple

import numpy as np
from joblib import Parallel, delayed
from scipy.optimize import minimize

from .calculus import MatrixOperand, gamma_apply, nrange_inclusion
from .cauchy import BoundarySamples
from .contour import Contour, refine
from .dlayer import analytic_image, convexity_report, np_matrix, np_norm
from .errors import BoundViolated, HypothesisViolated, OptimizerStall
from .generators import Polynomial, generator_sup, monomial, random_polynomial
from .geometry import min_enclosing_circle
from .linalg import top_singular
from .mapping import normalize_unit_ball
from .settings import tolerance

logger = logging.getLogger(__name__)

MAX_DEGREE = 16
STALL_MARGIN = 1e-12
NM_OPTIONS = {'xatol': 1e-10, 'fatol': 1e-13, 'adaptive': True}


@dataclass(frozen=True, eq=False)
class ExtremalResult:
    """Best (f0, x0) found by the search and the quantities derived from it."""
    f0: BoundarySamples
    x0: np.ndarray
    gamma_lb: float
    rho: float
    bound: float
    pairing: complex
    degree: int
    restarts: int
    seed: int
    stalled: bool
    coefficients: Tuple[complex, ...]
    center: complex
    trace: Tuple[float, ...] = field(default=(), repr=False)

    def to_dict(self) -> dict:
        return {
            'gamma_lb': self.gamma_lb,
            'rho': self.rho,
            'bound': self.bound,
            'pairing': [self.pairing.real, self.pairing.imag],
            'degree': self.degree,
            'restarts': self.restarts,
            'seed': self.seed,
            'stalled': self.stalled,
            'center': [self.center.real, self.center.imag],
            'coefficients': [[a.real, a.imag] for a in self.coefficients],
            'x0': [[v.real, v.imag] for v in self.x0],
        }


def _require_convex_inclusion(op: MatrixOperand, c: Contour, tolerances: Optional[Mapping[str, float]]) -> None:
    failed: List[str] = []
    if op.contour is not c:
        failed.append('operand certified on this contour')
    elif not convexity_report(c).is_convex:
        failed.append('convex domain')
    elif not nrange_inclusion(op, c, tolerance('inclusion_eig', tolerances),
                               tolerance('support', tolerances)).included:
        failed.append('numerical range inside domain')
    if failed:
        raise HypothesisViolated(f"Hypotheses failed: {', '.join(failed)}", failed=failed)


def _unpack(x: np.ndarray, degree: int) -> np.ndarray:
    # leading coefficient kept real: removes the unimodular-scaling direction
    imag = np.append(x[degree + 1:], 0.0)
    return x[:degree + 1] + 1j * imag


def _pack(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    lead = a[-1]
    if lead != 0:
        a = a * (abs(lead) / lead)
    return np.concatenate([a.real, a.imag[:-1]])


def _quotient(x: np.ndarray, basis: np.ndarray, samples: np.ndarray, degree: int) -> float:
    a = _unpack(x, degree)
    sup = float(np.max(np.abs(samples @ a)))
    if sup == 0.0:
        return 0.0
    return float(np.linalg.norm(np.tensordot(a, basis, axes=1), 2)) / sup


def _run_start(start: np.ndarray, basis: np.ndarray, samples: np.ndarray, degree: int):
    trace: List[float] = []

    def callback(intermediate_result):
        trace.append(-float(intermediate_result.fun))

    res = minimize(
        lambda x: -_quotient(x, basis, samples, degree),
        start,
        method='Nelder-Mead',
        callback=callback,
        options={**NM_OPTIONS, 'maxiter': 400 * start.size, 'maxfev': 400 * start.size},
    )
    return -float(res.fun), np.asarray(res.x), trace


def search_extremal(
    op: MatrixOperand,
    c: Contour,
    degree: int,
    restarts: int,
    seed: int,
    n_jobs: int = 1,
    tolerances: Optional[Mapping[str, float]] = None,
) -> ExtremalResult:
    """
    Maximise ||gamma(p)|| / sup|p| over polynomials of the given degree.

    Starts: p = z - centroid, p = 1, then ``restarts`` Gaussian starts with
    seeds split from ``seed``. The best start wins by (value, start index).
    When no random restart beats the affine start the result is flagged
    ``stalled`` and an OptimizerStall warning is issued.

    Raises:
        HypothesisViolated: If convexity or inclusion fails
        ValueError: On degree > 16 or restarts < 1
    """
    if not 0 <= degree <= MAX_DEGREE:
        raise ValueError(f"degree must lie in [0, {MAX_DEGREE}], got {degree}")
    if restarts < 1:
        raise ValueError(f"restarts must be >= 1, got {restarts}")
    _require_convex_inclusion(op, c, tolerances)

    disk = c.disk()
    center = disk[0] if disk is not None else c.centroid
    monomials = [monomial(k, center) for k in range(degree + 1)]
    basis = np.stack([gamma_apply(op, m.sample(c)) for m in monomials])
    fine = refine(c)
    samples = np.column_stack([m(fine.points) for m in monomials])

    affine = np.zeros(degree + 1, dtype=complex)
    affine[min(1, degree)] = 1.0
    constant = np.zeros(degree + 1, dtype=complex)
    constant[0] = 1.0
    starts = [_pack(affine), _pack(constant)]
    for child in np.random.SeedSequence(seed).spawn(restarts):
        rng = np.random.default_rng(child)
        starts.append(_pack(rng.standard_normal(degree + 1) + 1j * rng.standard_normal(degree + 1)))

    runs = Parallel(n_jobs=n_jobs)(delayed(_run_start)(s, basis, samples, degree) for s in starts)
    values = [value for value, _, _ in runs]
    best = max(range(len(runs)), key=lambda k: (values[k], -k))
    stalled = max(values[2:]) < values[0] + STALL_MARGIN
    if stalled:
        message = f"No random restart improved on the affine start ({values[0]:.12g})"
        logger.warning(message)
        warnings.warn(message, OptimizerStall, stacklevel=2)

    coeffs = _unpack(runs[best][1], degree)
    p = Polynomial(tuple(coeffs), center)
    p = p.scaled(1.0 / generator_sup(c, p))
    f0 = p.sample(c)
    G = gamma_apply(op, f0)
    gamma_lb, x0 = top_singular(G, seed=seed)
    pairing = complex(np.vdot(x0, G @ x0))
    rho = rho_of(op, c, f0, x0, tolerances)

    result = ExtremalResult(
        f0=f0,
        x0=x0,
        gamma_lb=gamma_lb,
        rho=rho,
        bound=1.0 + float(np.sqrt(max(0.0, 1.0 - rho))),
        pairing=pairing,
        degree=degree,
        restarts=restarts,
        seed=seed,
        stalled=stalled,
        coefficients=tuple(p.coeffs),
        center=complex(center),
        trace=tuple(runs[best][2]),
    )
    logger.info(f"Extremal search on {c.spec.family}: gamma_lb={gamma_lb:.9f}, rho={rho:.6g}, "
                f"start {best} of {len(runs)}")
    return result


def rho_of(op: MatrixOperand, c: Contour, f0: BoundarySamples, x0,
           tolerances: Optional[Mapping[str, float]] = None) -> float:
    """
    Re <gamma(conj(K f0) f0) x0, x0>.

    Raises:
        HypothesisViolated: If sup|f0| > 1 or |x0| != 1
    """
    x0 = np.asarray(x0, dtype=complex)
    failed = []
    if f0.sup > 1.0 + tolerance('unit_sup', tolerances):
        failed.append(f'sup|f0| <= 1 (got {f0.sup:.12g})')
    if abs(np.linalg.norm(x0) - 1.0) > 1e-12:
        failed.append(f'|x0| = 1 (got {np.linalg.norm(x0):.15g})')
    if failed:
        raise HypothesisViolated(f"Hypotheses failed: {', '.join(failed)}", failed=failed)
    h = analytic_image(c, f0).Kf.conj() * f0
    return float(np.real(np.vdot(x0, gamma_apply(op, h) @ x0)))


@dataclass(frozen=True)
class BoundReport:
    slack_rho_bound: float
    slack_cp: float
    measure_residual: float
    rho_config_radius: float
    rho_config_excess: float
    closing_margin: float
    disk_slack: Optional[float] = None


def bound_check(r: ExtremalResult, tolerances: Optional[Mapping[str, float]] = None) -> BoundReport:
    """
    Check the bounds implied by an extremal result.

    Asserts gamma_lb <= 1 + sqrt(1 - rho), gamma_lb <= 1 + sqrt(2),
    |rho| <= ||K|| and, on disks, gamma_lb <= 2. The measure residual,
    the configuration excess of rho and the closing margin are reported.

    Raises:
        BoundViolated: On any asserted bound
    """
    tol = tolerance('bound', tolerances)
    c = r.f0.contour

    def check(name: str, slack: float) -> float:
        if slack < -tol:
            raise BoundViolated(f"{name} violated with slack {slack:.3e}", check=name, slack=slack)
        return slack

    slack_rho = check('rho_bound', r.bound - r.gamma_lb)
    slack_cp = check('crouzeix_palencia', 1.0 + np.sqrt(2.0) - r.gamma_lb)
    check('rho_np_norm', np_norm(c) - abs(r.rho))
    disk_slack = check('disk', 2.0 - r.gamma_lb) if c.disk() is not None else None

    _, radius = min_enclosing_circle(np_matrix(c).apply(r.f0.values), seed=r.seed)
    g = r.gamma_lb
    report = BoundReport(
        slack_rho_bound=float(slack_rho),
        slack_cp=float(slack_cp),
        measure_residual=float((g - 1.0) * abs(r.pairing)),
        rho_config_radius=float(radius),
        rho_config_excess=float(abs(r.rho) - radius),
        closing_margin=float(2.0 * g ** 3 + g ** 2 - g ** 4),
        disk_slack=None if disk_slack is None else float(disk_slack),
    )
    logger.info(f"Bound check: {report}")
    return report


def analytic_config_lower(c: Contour, degree: int, samples: int, seed: int,
                          tolerances: Optional[Mapping[str, float]] = None) -> float:
    """
    Empirical sample of the analytic configuration of the domain.

    Maximum over seeded random normalised polynomials f of the Chebyshev
    radius of the node values of K(f). Not a certified bound either way.

    Raises:
        BoundViolated: If the estimate reaches 1 (allowance: the 'config_ceiling' tolerance)
    """
    rng = np.random.default_rng(seed)
    K = np_matrix(c)
    center = c.disk()[0] if c.disk() is not None else c.centroid
    best = 0.0
    for _ in range(samples):
        f = normalize_unit_ball(c, random_polynomial(rng, degree, center=center))
        _, radius = min_enclosing_circle(K.apply(f.values), seed=seed)
        best = max(best, radius)
    if best >= 1.0 + tolerance('config_ceiling', tolerances):
        raise BoundViolated(f"Analytic configuration estimate {best:.9f} is not below 1",
                            check='analytic_configuration', slack=1.0 - best)
    logger.info(f"Analytic configuration estimate on {c.spec.family}: {best:.9f} ({samples} samples)")
    return best


def write_trace_csv(r: ExtremalResult, path: Path) -> Path:
    """Optimizer trace of the winning start: iteration, value."""
    path = Path(path)
    data = np.column_stack([np.arange(len(r.trace)), np.asarray(r.trace, dtype=float)])
    np.savetxt(path, data.reshape(-1, 2), fmt='%.17g', delimiter=',', header='iteration,value', comments='')
    return path
