"""
Matrix functional calculi on a contour.

gamma(f) = (1/2 pi i) sum_j f_j (sigma_j - A)^-1 d(sigma_j) is the analytic
calculus, gamma_hat(f + conj g) = gamma(f) + gamma(g)^H its harmonic
extension, and P(sigma, A) = (n R + (n R)^H) / (2 pi) the operator-valued
double-layer potential. Resolvents are solved once per operand and node
and reused by every calculus on that operand.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Union

import numpy as np
from joblib import Parallel, delayed
from scipy.optimize import minimize_scalar

from .cauchy import BoundarySamples, constant_samples
from .contour import Contour, support_function
from .dlayer import analytic_image, convexity_report
from .errors import (
    DecompositionMismatch,
    HypothesisViolated,
    InconsistentInclusion,
    NonConvexDomain,
    NonIntegerCount,
    ResolventSingular,
    SingularMatrix,
)
from .generators import random_polynomial
from .linalg import as_cmatrix, hermitian_eigen, lu_solve, spectral_norm
from .settings import DEFAULT_TOLERANCES, tolerance

logger = logging.getLogger(__name__)

INCLUSION_ANGLES = 360
RADIUS_ANGLES = 720


def resolvent_stack(A, c: Contour) -> np.ndarray:
    """
    (sigma_j - A)^-1 at every node, shape (N, d, d).

    Raises:
        ResolventSingular: If a node is too close to an eigenvalue
    """
    M = as_cmatrix(A)
    eye = np.eye(M.shape[0], dtype=complex)
    stack = np.empty((c.n,) + M.shape, dtype=complex)
    for j, sigma in enumerate(c.points):
        try:
            stack[j] = lu_solve(sigma * eye - M, eye)
        except SingularMatrix as exc:
            raise ResolventSingular(f"Resolvent singular at node {j} (sigma={sigma:.6g})", node=j) from exc
    return stack


def count_from_stack(stack: np.ndarray, c: Contour, tol: float = DEFAULT_TOLERANCES['integer_count']) -> int:
    """
    Argument-principle eigenvalue count from a resolvent stack.

    Raises:
        NonIntegerCount: If the quadrature value is not within ``tol`` of an integer
    """
    traces = np.einsum('jii->j', stack)
    raw = np.sum(c.dsigma * traces) / (2j * np.pi)
    nearest = round(raw.real)
    if abs(raw - nearest) > tol:
        raise NonIntegerCount(f"Eigenvalue count {raw:.9g} is not an integer within {tol:.0e}", value=complex(raw))
    return int(nearest)


def spectrum_inside_count(A, c: Contour) -> int:
    """Number of eigenvalues of A inside the contour (argument principle)."""
    return count_from_stack(resolvent_stack(A, c), c)


def contour_gamma(stack: np.ndarray, c: Contour, values) -> np.ndarray:
    """(1/2 pi i) sum_j values_j d(sigma_j) R_j for a precomputed resolvent stack."""
    coeffs = np.asarray(values, dtype=complex) * c.dsigma
    return np.einsum('j,jab->ab', coeffs, stack) / (2j * np.pi)


@dataclass(frozen=True, eq=False)
class MatrixOperand:
    """A matrix certified to have its whole spectrum inside a contour."""
    A: np.ndarray
    contour: Contour
    inside_count: int
    resolvents: np.ndarray

    @property
    def dim(self) -> int:
        return self.A.shape[0]


def certify_operand(A, c: Contour, tol: float = DEFAULT_TOLERANCES['integer_count']) -> MatrixOperand:
    """
    Build a MatrixOperand, certifying that every eigenvalue is inside ``c``.

    Raises:
        ResolventSingular, NonIntegerCount: From the count
        HypothesisViolated: If some eigenvalue lies outside
    """
    M = as_cmatrix(A).copy()
    stack = resolvent_stack(M, c)
    count = count_from_stack(stack, c, tol)
    if count != M.shape[0]:
        raise HypothesisViolated(
            f"Only {count} of {M.shape[0]} eigenvalues lie inside the contour",
            failed=['spectrum inside contour'],
        )
    M.setflags(write=False)
    stack.setflags(write=False)
    return MatrixOperand(A=M, contour=c, inside_count=count, resolvents=stack)


def _check_contour(op: MatrixOperand, phi: BoundarySamples) -> None:
    if phi.contour is not op.contour:
        raise ValueError("Samples and operand live on different contours")


def gamma_apply(op: MatrixOperand, f: BoundarySamples) -> np.ndarray:
    """Analytic functional calculus gamma(f)."""
    _check_contour(op, f)
    return contour_gamma(op.resolvents, op.contour, f.values)


def hat_gamma_apply(op: MatrixOperand, f: BoundarySamples, g: BoundarySamples) -> np.ndarray:
    """Harmonic calculus gamma_hat(f + conj g) = gamma(f) + gamma(g)^H."""
    return gamma_apply(op, f) + gamma_apply(op, g).conj().T


def potential_stack(op: MatrixOperand) -> np.ndarray:
    """P(sigma_j, A) for every node, shape (N, d, d), Hermitian by construction."""
    M = op.contour.normals[:, None, None] * op.resolvents
    return (M + np.conj(np.swapaxes(M, 1, 2))) / (2.0 * np.pi)


def op_dl_potential(op: MatrixOperand, j: int) -> np.ndarray:
    """Operator double-layer potential P(sigma_j, A)."""
    M = op.contour.normals[j] * op.resolvents[j]
    return (M + M.conj().T) / (2.0 * np.pi)


def decomposition_mismatch(op: MatrixOperand, f: BoundarySamples, sym: Optional[np.ndarray] = None) -> float:
    """Frobenius distance between sum_j w_j f_j P(sigma_j, A) and gamma(conj K(f))^H + gamma(f)."""
    _check_contour(op, f)
    if sym is None:
        sym = np.einsum('j,jab->ab', op.contour.weights * f.values, potential_stack(op))
    image = analytic_image(op.contour, f)
    other = gamma_apply(op, image.Kf.conj()).conj().T + gamma_apply(op, f)
    return float(np.linalg.norm(sym - other, 'fro'))


def sym_calculus_apply(
    op: MatrixOperand,
    phi: BoundarySamples,
    tol: float = DEFAULT_TOLERANCES['decomposition'],
) -> np.ndarray:
    """
    sum_j w_j phi_j P(sigma_j, A), i.e. gamma_hat(K^i(phi)).

    For analytic samples the result is cross-checked against
    gamma(conj K(f))^H + gamma(f).

    Raises:
        DecompositionMismatch: If the two routes differ by more than ``tol`` (Frobenius)
    """
    _check_contour(op, phi)
    c = op.contour
    result = np.einsum('j,jab->ab', c.weights * phi.values, potential_stack(op))
    if phi.analytic:
        mismatch = decomposition_mismatch(op, phi, sym=result)
        if mismatch > tol:
            raise DecompositionMismatch(
                f"Symmetrised calculus differs from its decomposition by {mismatch:.3e}", mismatch=mismatch)
        logger.debug(f"Decomposition mismatch {mismatch:.2e}")
    return result


def nrange_support(A, theta: float) -> float:
    """Support function of W(A) at angle theta (Jacobi reference path)."""
    M = as_cmatrix(A)
    H = 0.5 * (np.exp(-1j * theta) * M + np.exp(1j * theta) * M.conj().T)
    eigenvalues, _ = hermitian_eigen(H)
    return float(eigenvalues[-1])


def support_sweep(A, thetas) -> np.ndarray:
    """Support function of W(A) at many angles (batched LAPACK)."""
    M = as_cmatrix(A)
    rot = np.exp(-1j * np.asarray(thetas, dtype=float))[:, None, None]
    H = 0.5 * (rot * M[None] + np.conj(rot) * M.conj().T[None])
    return np.linalg.eigvalsh(H)[:, -1]


def numerical_radius(A, angles: int = RADIUS_ANGLES) -> float:
    """
    max over theta of the support function of W(A).

    A sweep at ``angles`` is doubled once, then the best angle is polished
    by bounded scalar maximisation.
    """
    M = as_cmatrix(A)
    coarse = support_sweep(M, np.linspace(0.0, 2 * np.pi, angles, endpoint=False))
    thetas = np.linspace(0.0, 2 * np.pi, 2 * angles, endpoint=False)
    fine = support_sweep(M, thetas)
    logger.debug(f"Numerical radius sweep refinement change {abs(fine.max() - coarse.max()):.2e}")
    best = int(np.argmax(fine))
    step = thetas[1] - thetas[0]
    res = minimize_scalar(
        lambda th: -support_sweep(M, [th])[0],
        bounds=(thetas[best] - step, thetas[best] + step),
        method='bounded',
        options={'xatol': 1e-12},
    )
    return float(max(fine[best], -res.fun))


@dataclass(frozen=True)
class OperandReport:
    min_eig_P: float
    support_slack: float
    sym_norm_at_one: float
    included: bool


def _support_slack(op: MatrixOperand, angles: int) -> float:
    thetas = np.linspace(0.0, 2 * np.pi, angles, endpoint=False)
    return float(np.min(support_function(op.contour, thetas) - support_sweep(op.A, thetas)))


def nrange_inclusion(
    op: MatrixOperand,
    c: Optional[Contour] = None,
    eig_tol: float = DEFAULT_TOLERANCES['inclusion_eig'],
    support_tol: float = DEFAULT_TOLERANCES['support'],
) -> OperandReport:
    """
    Decide W(A) within the closed domain by kernel positivity and by support functions.

    Raises:
        NonConvexDomain: If the contour is not convex
        InconsistentInclusion: If the two verdicts (or the refined sweep) disagree
    """
    c = c or op.contour
    if c is not op.contour:
        raise ValueError("Operand is certified on a different contour")
    if not convexity_report(c).is_convex:
        raise NonConvexDomain(f"{c.spec.family} contour is not convex")

    min_eig = float(np.min(np.linalg.eigvalsh(potential_stack(op))[:, 0]))
    slack = _support_slack(op, INCLUSION_ANGLES)
    slack_refined = _support_slack(op, 2 * INCLUSION_ANGLES)
    sym_norm = spectral_norm(sym_calculus_apply(op, constant_samples(c, 1.0)))

    kernel_verdict = min_eig >= -eig_tol
    support_verdict = slack >= -support_tol
    if kernel_verdict != support_verdict or support_verdict != (slack_refined >= -support_tol):
        raise InconsistentInclusion(
            f"Inclusion verdicts disagree: min_eig_P={min_eig:.3e}, support_slack={slack:.3e}, "
            f"refined={slack_refined:.3e}"
        )
    report = OperandReport(min_eig_P=min_eig, support_slack=slack, sym_norm_at_one=sym_norm, included=kernel_verdict)
    logger.info(f"Inclusion on {c.spec.family}: {report}")
    return report


def critical_scale(G, c: Contour, center: complex, angles: int = 2 * RADIUS_ANGLES) -> float:
    """
    Largest s with W(center + s G) inside the domain, for trace-free G.

    Uses support functions: s * h_G(theta) <= h_Omega(theta) - Re(exp(-i theta) center).
    """
    thetas = np.linspace(0.0, 2 * np.pi, angles, endpoint=False)
    room = support_function(c, thetas) - np.real(np.exp(-1j * thetas) * center)
    h = support_sweep(G, thetas)
    positive = h > 1e-14
    if not np.any(positive):
        return np.inf
    return float(np.min(room[positive] / h[positive]))


def random_operand_matrix(
    c: Contour,
    dim: int,
    rng: np.random.Generator,
    scale_fraction: float,
    max_draws: int = 100,
) -> np.ndarray:
    """
    Random complex matrix with W(A) scaled to ``scale_fraction`` of the critical size.

    The centre is the contour centroid; draws whose eigenvalues come within
    5% of the diameter of the boundary are rejected so the trapezoid
    calculus stays accurate.
    """
    center = c.centroid
    for _ in range(max_draws):
        G = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        G -= np.trace(G) / dim * np.eye(dim)
        s = critical_scale(G, c, center)
        if not np.isfinite(s):
            continue
        A = center * np.eye(dim) + scale_fraction * s * G
        eigenvalues = np.linalg.eigvals(A)
        gap = np.min(np.abs(eigenvalues[:, None] - c.points[None, :]))
        if gap >= 0.05 * c.diameter:
            return A
    raise HypothesisViolated(f"No admissible random {dim}x{dim} operand in {max_draws} draws",
                             failed=['random operand'])


def nrange_boundary_points(A, thetas) -> np.ndarray:
    """Points <A x, x> of W(A) at the top eigenvector of each support direction."""
    M = as_cmatrix(A)
    rot = np.exp(-1j * np.asarray(thetas, dtype=float))[:, None, None]
    H = 0.5 * (rot * M[None] + np.conj(rot) * M.conj().T[None])
    _, vectors = np.linalg.eigh(H)
    x = vectors[:, :, -1]
    return np.einsum('ka,ab,kb->k', x.conj(), M, x)


CALCULUS_COLUMNS = (
    'trial', 'seed', 'dim', 'scale_fraction', 'certified', 'total_mass_error',
    'decomposition_mismatch', 'included', 'inclusion_agrees', 'sym_norm_at_one',
)


def _calculus_trial(c: Contour, trial: int, child: np.random.SeedSequence, dim: int, degree: int,
                    scale_fraction: float, functions: int, convex: bool,
                    tolerances: Optional[Mapping[str, float]]) -> Dict[str, object]:
    rng = np.random.default_rng(child)
    row: Dict[str, object] = {
        'trial': trial, 'seed': int(child.generate_state(1)[0]), 'dim': dim, 'scale_fraction': scale_fraction,
        'certified': False, 'total_mass_error': None, 'decomposition_mismatch': None,
        'included': None, 'inclusion_agrees': None, 'sym_norm_at_one': None,
    }
    try:
        A = random_operand_matrix(c, dim, rng, scale_fraction)
        op = certify_operand(A, c, tolerance('integer_count', tolerances))
    except HypothesisViolated:
        # draws past the critical size may put an eigenvalue outside
        return row
    row['certified'] = True

    total = sym_calculus_apply(op, constant_samples(c, 1.0), tol=np.inf)
    row['total_mass_error'] = float(np.linalg.norm(total - 2.0 * np.eye(dim), 'fro'))
    center = c.disk()[0] if c.disk() is not None else c.centroid
    row['decomposition_mismatch'] = max(
        decomposition_mismatch(op, random_polynomial(rng, degree, center=center).sample(c))
        for _ in range(functions)
    )
    if convex:
        try:
            inc = nrange_inclusion(op, c, tolerance('inclusion_eig', tolerances), tolerance('support', tolerances))
        except InconsistentInclusion:
            row['inclusion_agrees'] = False
        else:
            row['included'] = inc.included
            row['sym_norm_at_one'] = inc.sym_norm_at_one
            row['inclusion_agrees'] = inc.included == (scale_fraction < 1.0)
    return row


def run_calculus_ensemble(
    c: Contour,
    trials: int,
    dims: Sequence[int],
    degree: int,
    seed: Union[int, np.random.SeedSequence],
    scale_fractions: Sequence[float] = (0.9,),
    functions: int = 10,
    n_jobs: int = 1,
    tolerances: Optional[Mapping[str, float]] = None,
) -> List[Dict[str, object]]:
    """
    Random certified matrices checked for total mass, decomposition and inclusion.

    Trial k uses dimension ``dims[k % len(dims)]`` and scale fraction
    ``scale_fractions[k % len(scale_fractions)]`` of the critical size, so a
    straddling list exercises both inclusion verdicts. ``inclusion_agrees``
    is False when the kernel and support tests disagree or when the verdict
    contradicts the scale (included exactly below the critical size); it is
    None on non-convex contours. Rows come back in trial order for any
    ``n_jobs``.
    """
    if trials < 1:
        raise ValueError(f"trials must be positive, got {trials}")
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = root.spawn(trials)
    convex = convexity_report(c).is_convex
    rows = Parallel(n_jobs=n_jobs)(
        delayed(_calculus_trial)(c, k, child, dims[k % len(dims)], degree,
                                 float(scale_fractions[k % len(scale_fractions)]), functions, convex, tolerances)
        for k, child in enumerate(children)
    )
    certified = sum(1 for row in rows if row['certified'])
    logger.info(f"Calculus ensemble on {c.spec.family}: {certified}/{trials} certified, dims={list(dims)}")
    return list(rows)
