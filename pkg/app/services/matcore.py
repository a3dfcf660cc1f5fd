"""
Dense matrix kernel: structured linear matrix equations, Lyapunov/Sylvester
and Riccati solvers, spectral helpers.

All routines are pure functions of their inputs and read tolerances from
``config.settings`` at call time.
"""
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as la
from loguru import logger

from app.exceptions import (
    DimensionError,
    ImaginaryAxisEigenvalue,
    MatrixEquationError,
    NotHurwitz,
    NotPositiveSemidefinite,
    NotStabilizable,
    NotSymmetric,
    SpectrumOverlap,
)
from app.models.certificate import Definiteness
from app.models.matrix import (
    LinearConstraintSystem,
    SolutionStatus,
    StructuredSolution,
    Symmetry,
    as_matrix,
)
from config.settings import settings

LinearMap = Callable[[np.ndarray], np.ndarray]


def fro(M) -> float:
    """Frobenius norm, zero for empty arrays."""
    M = np.asarray(M)
    return float(np.linalg.norm(M)) if M.size else 0.0


def _square(M, name: str) -> np.ndarray:
    M = as_matrix(M, name=name)
    if M.shape[0] != M.shape[1]:
        raise DimensionError(f"{name} must be square, got {M.shape}")
    return M


def is_hurwitz(A: np.ndarray) -> bool:
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return True
    margin = 1e-12 * max(1.0, fro(A))
    return bool(np.max(np.linalg.eigvals(A).real) < -margin)


def require_hurwitz(A: np.ndarray) -> None:
    if not is_hurwitz(A):
        abscissa = float(np.max(np.linalg.eigvals(A).real))
        raise NotHurwitz(f"A is not Hurwitz (spectral abscissa {abscissa:.3e})", abscissa=abscissa)


def solve_sylvester(A, B, C) -> np.ndarray:
    """
    Solve AX + XB = C.

    Args:
        A: n×n matrix
        B: m×m matrix
        C: n×m right-hand side

    Returns:
        The unique n×m solution X

    Raises:
        SpectrumOverlap: If A and -B share an eigenvalue
        DimensionError: On shape mismatch
    """
    A = _square(A, "A")
    B = _square(B, "B")
    C = as_matrix(C, A.shape[0], B.shape[0], "C")
    if C.size == 0:
        return np.zeros(C.shape)

    lam = np.linalg.eigvals(A)
    mu = np.linalg.eigvals(B)
    gap = float(np.min(np.abs(lam[:, None] + mu[None, :])))
    if gap <= 1e-10 * max(1.0, fro(A), fro(B)):
        raise SpectrumOverlap(f"A and -B share an eigenvalue (separation {gap:.3e})", separation=gap)

    X = la.solve_sylvester(A, B, C)
    residual = fro(A @ X + X @ B - C)
    logger.debug(f"Sylvester n={A.shape[0]} m={B.shape[0]} residual={residual:.3e}")
    return X


def solve_lyapunov(A, W) -> np.ndarray:
    """
    Solve AX + XAᵀ + W = 0 for Hurwitz A and symmetric W.

    Raises:
        NotHurwitz: If any eigenvalue of A has nonnegative real part
    """
    A = _square(A, "A")
    W = as_matrix(W, A.shape[0], A.shape[0], "W")
    if A.size == 0:
        return np.zeros((0, 0))
    require_hurwitz(A)
    X = la.solve_continuous_lyapunov(A, -W)
    return 0.5 * (X + X.T)


def matrix_exponential(A, t: float = 1.0) -> np.ndarray:
    """e^{At} by scaling and squaring."""
    A = _square(A, "A")
    if A.size == 0:
        return np.zeros((0, 0))
    return la.expm(A * float(t))


def _stabilizable(F: np.ndarray, P: np.ndarray, sign: float) -> bool:
    """PBH test of (sign·F, P) on the closed right half plane."""
    n = F.shape[0]
    margin = 1e-9 * max(1.0, fro(F))
    for lam in np.linalg.eigvals(F):
        if sign * lam.real >= -margin:
            pencil = np.hstack([F - lam * np.eye(n), P])
            s = np.linalg.svd(pencil, compute_uv=False)
            if s[-1] <= settings.null_tol * max(1.0, s[0]):
                return False
    return True


def solve_care(F, P, S, stable: bool = True) -> np.ndarray:
    """
    Solve FᵀX + XF - XPX + S = 0 via the invariant subspace of the
    Hamiltonian matrix [[F, -P], [-S, -Fᵀ]].

    Args:
        F: n×n matrix
        P: symmetric n×n matrix
        S: symmetric n×n matrix
        stable: Return the stabilizing solution (F - PX Hurwitz); the
            anti-stabilizing one otherwise

    Returns:
        Symmetric solution X

    Raises:
        NotStabilizable: If (F, P) fails the PBH test
        ImaginaryAxisEigenvalue: If the Hamiltonian matrix has eigenvalues on
            the imaginary axis
        NotSymmetric: If P or S is not symmetric
    """
    F = _square(F, "F")
    n = F.shape[0]
    P = as_matrix(P, n, n, "P")
    S = as_matrix(S, n, n, "S")
    for name, M in (("P", P), ("S", S)):
        if fro(M - M.T) > settings.sym_tol * max(1.0, fro(M)):
            raise NotSymmetric(f"{name} is not symmetric")
    if n == 0:
        return np.zeros((0, 0))

    sign = 1.0 if stable else -1.0
    if not _stabilizable(F, P, sign):
        raise NotStabilizable("(F, P) is not stabilizable" if stable else "(-F, P) is not stabilizable")

    H = np.block([[F, -P], [-S, -F.T]])
    eigs = np.linalg.eigvals(H)
    scale = max(1.0, fro(H))
    axis_gap = float(np.min(np.abs(eigs.real)))
    if axis_gap <= 1e-9 * scale:
        raise ImaginaryAxisEigenvalue(
            f"Hamiltonian matrix has eigenvalues on the imaginary axis (|Re| = {axis_gap:.3e})",
            gap=axis_gap,
        )

    _, Z, sdim = la.schur(H, output="real", sort="lhp" if stable else "rhp")
    if sdim != n:
        raise ImaginaryAxisEigenvalue(f"expected {n} eigenvalues in the half plane, found {sdim}")
    U1, U2 = Z[:n, :n], Z[n:, :n]
    if np.linalg.cond(U1) > 1e12:
        raise NotStabilizable("invariant subspace is not a graph over the first block")
    X = np.linalg.solve(U1.T, U2.T).T
    X = 0.5 * (X + X.T)

    residual = fro(F.T @ X + X @ F - X @ P @ X + S)
    bound = settings.feas_tol * (1.0 + fro(S) + 2 * fro(F) * fro(X) + fro(P) * fro(X) ** 2)
    logger.debug(f"CARE n={n} stable={stable} residual={residual:.3e}")
    if residual > bound:
        raise MatrixEquationError(f"Riccati residual {residual:.3e} exceeds tolerance", residual=residual)
    return X


def nullspace(M, rcond: Optional[float] = None) -> np.ndarray:
    """Orthonormal basis (columns) of {x : Mx = 0}."""
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M.reshape(1, -1)
    cols = M.shape[1]
    if cols == 0:
        return np.zeros((0, 0))
    if M.shape[0] == 0 or not np.any(M):
        return np.eye(cols)
    return la.null_space(M, rcond=settings.null_tol if rcond is None else rcond)


def rank(M, rcond: Optional[float] = None) -> int:
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > (settings.null_tol if rcond is None else rcond) * s[0]))


def symmetric_eig(M) -> Tuple[np.ndarray, np.ndarray]:
    """
    Eigen-decomposition of a symmetric matrix.

    Returns:
        (eigenvalues ascending, orthonormal eigenvectors as columns)

    Raises:
        NotSymmetric: If ‖M - Mᵀ‖ exceeds sym_tol relative to ‖M‖
    """
    M = _square(M, "M")
    if fro(M - M.T) > settings.sym_tol * max(1.0, fro(M)):
        raise NotSymmetric(f"matrix is not symmetric (asymmetry {fro(M - M.T):.3e})")
    return np.linalg.eigh(0.5 * (M + M.T))


def definiteness(M) -> Definiteness:
    """Classify a symmetric matrix with threshold definiteness_tol·‖M‖."""
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return Definiteness.POSDEF
    lam = np.linalg.eigvalsh(0.5 * (M + M.T))
    tol = settings.definiteness_tol * max(fro(M), np.finfo(float).tiny)
    if np.any(np.abs(lam) <= tol):
        return Definiteness.SINGULAR
    if lam[0] > 0:
        return Definiteness.POSDEF
    if lam[-1] < 0:
        return Definiteness.NEGDEF
    return Definiteness.INDEFINITE


def is_psd(M, tol: Optional[float] = None) -> bool:
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return True
    lam = np.linalg.eigvalsh(0.5 * (M + M.T))
    tol = settings.definiteness_tol if tol is None else tol
    return bool(lam[0] >= -tol * max(1.0, fro(M)))


def psd_sqrt(P, clip: float = 1e-10) -> np.ndarray:
    """
    Symmetric square root of a positive semidefinite matrix.

    Eigenvalues down to -clip·max(1, ‖P‖) are treated as zero.

    Raises:
        NotPositiveSemidefinite: For more negative eigenvalues
    """
    P = as_matrix(P, name="P")
    if P.size == 0:
        return np.zeros(P.shape)
    lam, V = symmetric_eig(P)
    if lam[0] < -clip * max(1.0, fro(P)):
        raise NotPositiveSemidefinite(f"matrix has negative eigenvalue {lam[0]:.3e}", eigenvalue=float(lam[0]))
    return (V * np.sqrt(np.clip(lam, 0.0, None))) @ V.T


def min_singular_value(M) -> float:
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return np.inf
    return float(np.linalg.svd(M, compute_uv=False)[-1])


def is_invertible(M) -> bool:
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return True
    return min_singular_value(M) > settings.null_tol * max(1.0, fro(M))


# Structured linear matrix equations

def _parameter_basis(rows: int, cols: int, symmetry: Symmetry) -> np.ndarray:
    """Columns map free parameters to row-major vec(X)."""
    if symmetry == Symmetry.NONE:
        return np.eye(rows * cols)
    columns = []
    for i in range(rows):
        start = i if symmetry == Symmetry.SYMMETRIC else i + 1
        for j in range(start, cols):
            E = np.zeros((rows, cols))
            E[i, j] = 1.0
            if i != j:
                E[j, i] = 1.0 if symmetry == Symmetry.SYMMETRIC else -1.0
            columns.append(E.reshape(-1))
    if not columns:
        return np.zeros((rows * cols, 0))
    return np.array(columns).T


def constraint_system(
    shape: Tuple[int, int],
    equations: Sequence[Tuple[LinearMap, np.ndarray]],
    symmetry: Symmetry = Symmetry.NONE,
) -> LinearConstraintSystem:
    """
    Vectorize equations ``L(X) = R`` over the entries of X.

    Args:
        shape: Shape of the unknown X
        equations: Pairs of a linear map on matrices and its right-hand side
        symmetry: Structure imposed on X

    Returns:
        LinearConstraintSystem with one coefficient row per scalar equation
    """
    rows, cols = shape
    size = rows * cols
    blocks: List[np.ndarray] = []
    rhs: List[np.ndarray] = []
    for linear_map, right in equations:
        right = np.atleast_2d(np.asarray(right, dtype=float))
        if right.size == 0:
            continue
        block = np.zeros((right.size, size))
        for k in range(size):
            E = np.zeros(size)
            E[k] = 1.0
            block[:, k] = np.asarray(linear_map(E.reshape(rows, cols)), dtype=float).reshape(-1)
        blocks.append(block)
        rhs.append(right.reshape(-1))
    coefficients = np.vstack(blocks) if blocks else np.zeros((0, size))
    rhs_vec = np.concatenate(rhs) if rhs else np.zeros(0)
    return LinearConstraintSystem(shape=(rows, cols), coefficients=coefficients, rhs=rhs_vec, symmetry=symmetry)


def solve_structured(system: LinearConstraintSystem) -> StructuredSolution:
    """
    Least-squares solve of a LinearConstraintSystem.

    The solution set is reported as a particular solution (minimum norm in
    the structured parametrization) plus a basis of the homogeneous null
    space. Infeasibility is a status, never an exception.
    """
    rows, cols = system.shape
    basis = _parameter_basis(rows, cols, system.symmetry)
    p = basis.shape[1]
    rhs = system.rhs
    M = system.coefficients @ basis

    if p == 0:
        z = np.zeros(0)
        null = np.zeros((0, 0))
        smax = 0.0
    elif M.shape[0] == 0:
        z = np.zeros(p)
        null = np.eye(p)
        smax = 0.0
    else:
        U, s, Vt = np.linalg.svd(M, full_matrices=True)
        smax = float(s[0]) if s.size else 0.0
        r = int(np.sum(s > settings.null_tol * smax)) if smax > 0 else 0
        z = Vt[:r].T @ ((U[:, :r].T @ rhs) / s[:r])
        null = Vt[r:].T

    residual = float(np.linalg.norm(M @ z - rhs)) if rhs.size else 0.0
    threshold = settings.feas_tol * (1.0 + float(np.linalg.norm(rhs)))
    if residual > threshold:
        status = SolutionStatus.INFEASIBLE
    elif null.shape[1] == 0:
        status = SolutionStatus.UNIQUE
    else:
        status = SolutionStatus.FAMILY

    particular = (basis @ z).reshape(rows, cols) if p else np.zeros((rows, cols))
    null_basis = np.array([(basis @ null[:, k]).reshape(rows, cols) for k in range(null.shape[1])])
    if null_basis.size == 0:
        null_basis = np.zeros((0, rows, cols))
    logger.debug(
        f"solve_structured shape={system.shape} symmetry={system.symmetry.value} "
        f"equations={system.equation_count} status={status.value} residual={residual:.3e}"
    )
    return StructuredSolution(status=status, particular=particular, null_basis=null_basis, residual=residual)
