"""
Dense complex linear algebra primitives.

LU solves carry a pivot certificate on top of LAPACK, Hermitian eigenproblems
use cyclic complex Jacobi rotations, and the largest singular pair comes from
power iteration on M*M. Everything here is pure; matrices are numpy arrays.
"""

import logging
import warnings
from typing import Optional, Tuple

import numpy as np
import scipy.linalg

from .errors import NoConvergence, SingularMatrix
from .settings import DEFAULT_TOLERANCES

logger = logging.getLogger(__name__)

JACOBI_MAX_SWEEPS = 100
POWER_MAX_ITERATIONS = 100_000


def as_cmatrix(A) -> np.ndarray:
    """
    Coerce to a square complex matrix with finite entries.

    Raises:
        ValueError: If the input is not square or has non-finite entries
    """
    M = np.asarray(A, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] == 0:
        raise ValueError(f"Expected a non-empty square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("Matrix has non-finite entries")
    return M


def as_hermitian(H, tol: float = DEFAULT_TOLERANCES['hermitian']) -> np.ndarray:
    """Coerce to a Hermitian matrix, checking symmetry to ``tol`` absolute."""
    M = as_cmatrix(H)
    asym = np.max(np.abs(M - M.conj().T))
    if asym > tol:
        raise ValueError(f"Matrix is not Hermitian (max asymmetry {asym:.3e})")
    return 0.5 * (M + M.conj().T)


def lu_factor(A, threshold: float = DEFAULT_TOLERANCES['lu_pivot']) -> Tuple[np.ndarray, np.ndarray]:
    """
    LU factorisation with partial pivoting and a relative pivot certificate.

    Args:
        A: Square complex matrix
        threshold: Smallest admissible |pivot| relative to max|entry|

    Returns:
        (lu, piv) as produced by scipy.linalg.lu_factor

    Raises:
        SingularMatrix: If a pivot falls below threshold * max|A_ij|
    """
    M = as_cmatrix(A)
    scale = np.max(np.abs(M))
    if scale == 0.0:
        raise SingularMatrix("Zero matrix", min_pivot=0.0)
    with warnings.catch_warnings():
        warnings.simplefilter('ignore', scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(M, check_finite=False)
    min_pivot = float(np.min(np.abs(np.diag(lu))))
    if min_pivot < threshold * scale:
        raise SingularMatrix(
            f"Pivot {min_pivot:.3e} below {threshold:.0e} x max|entry| ({scale:.3e})",
            min_pivot=min_pivot,
        )
    return lu, piv


def lu_solve(A, b, threshold: float = DEFAULT_TOLERANCES['lu_pivot']) -> np.ndarray:
    """
    Solve A x = b by partial-pivoting LU.

    ``b`` may be a vector or a matrix of right-hand sides.

    Raises:
        SingularMatrix: If A fails the pivot certificate
    """
    lu, piv = lu_factor(A, threshold=threshold)
    rhs = np.asarray(b, dtype=complex)
    return scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)


def hermitian_eigen(
    H,
    tol: float = DEFAULT_TOLERANCES['jacobi_offdiag'],
    max_sweeps: int = JACOBI_MAX_SWEEPS,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi.

    Each rotation first removes the phase of H[p, q] and then applies the
    real symmetric Jacobi rotation, so the (p, q) entry is annihilated.

    Args:
        H: Hermitian matrix (checked to 1e-12)
        tol: Stop once off-diagonal Frobenius mass <= tol * ||H||_F
        max_sweeps: Sweep budget

    Returns:
        (eigenvalues ascending, unitary matrix of eigenvectors as columns)

    Raises:
        NoConvergence: If the budget is exhausted
    """
    A = as_hermitian(H).copy()
    n = A.shape[0]
    V = np.eye(n, dtype=complex)
    target = tol * np.linalg.norm(A, 'fro')

    def off_mass(M: np.ndarray) -> float:
        return float(np.sqrt(max(np.linalg.norm(M, 'fro') ** 2 - np.sum(np.abs(np.diag(M)) ** 2), 0.0)))

    for sweep in range(max_sweeps + 1):
        if off_mass(A) <= target:
            eigenvalues = np.real(np.diag(A)).copy()
            order = np.argsort(eigenvalues, kind='stable')
            logger.debug(f"Jacobi converged after {sweep} sweeps (n={n})")
            return eigenvalues[order], V[:, order]
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                mag = abs(apq)
                if mag == 0.0:
                    continue
                phase = apq / mag
                tau = (A[q, q].real - A[p, p].real) / (2.0 * mag)
                if tau == 0.0:
                    t = 1.0
                else:
                    t = np.sign(tau) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                J = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]], dtype=complex)
                idx = [p, q]
                A[:, idx] = A[:, idx] @ J
                A[idx, :] = J.conj().T @ A[idx, :]
                A[p, q] = A[q, p] = 0.0
                A[p, p] = A[p, p].real
                A[q, q] = A[q, q].real
                V[:, idx] = V[:, idx] @ J

    raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps", iterations=max_sweeps)


def top_singular(
    M,
    seed: Optional[int] = 0,
    tol: float = DEFAULT_TOLERANCES['power_iteration'],
    max_iterations: int = POWER_MAX_ITERATIONS,
) -> Tuple[float, np.ndarray]:
    """
    Largest singular value and a unit right-singular vector of M.

    Power iteration on M*M from a seeded random complex start; stops when
    the relative change of the Rayleigh value is <= tol.

    Raises:
        ValueError: If M is the zero matrix
        NoConvergence: After ``max_iterations`` iterations
    """
    A = as_cmatrix(M)
    if not np.any(A):
        raise ValueError("top_singular requires a nonzero matrix")
    gram = A.conj().T @ A
    rng = np.random.default_rng(seed)
    n = A.shape[0]
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    x /= np.linalg.norm(x)

    previous = None
    for iteration in range(1, max_iterations + 1):
        y = gram @ x
        value = float(np.linalg.norm(y))
        if value == 0.0:
            # start landed in the kernel; restart along the largest column
            x = gram[:, int(np.argmax(np.linalg.norm(gram, axis=0)))].copy()
            x /= np.linalg.norm(x)
            continue
        x = y / value
        if previous is not None and abs(value - previous) <= tol * value:
            logger.debug(f"Power iteration converged in {iteration} iterations")
            return float(np.sqrt(value)), x
        previous = value

    raise NoConvergence(f"Power iteration did not converge in {max_iterations} iterations", iterations=max_iterations)


def spectral_norm(M) -> float:
    """Operator 2-norm via LAPACK SVD."""
    return float(np.linalg.norm(np.asarray(M, dtype=complex), 2))
