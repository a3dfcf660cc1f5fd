"""
Linear geometry on F×E: orthogonal companions under the symplectic and
plus pairings, Lagrangian and Dirac tests, separability, hybrid and
kernel representations, and grid realizations of the Hankel and
constrained Volterra operators.
"""
from typing import Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as la
from loguru import logger

from app.exceptions import (
    ConstraintViolated,
    DimensionError,
    FeedthroughNonzero,
    Infeasible,
    NotDirac,
    NotLagrangian,
    NotReciprocal,
)
from app.models.certificate import Certificate, CertificateKind
from app.models.subspace import (
    DiscretizedOperator,
    HankelCheckReport,
    HybridRepresentation,
    KernelRepresentation,
    LinearSubspace,
    PairingForm,
    PairingForms,
    SeparableResult,
    VolterraReport,
)
from app.models.system import StateSpaceSystem
from app.services import certify, hankel, lti
from app.services.matcore import fro, matrix_exponential, nullspace, rank, require_hurwitz
from config.settings import settings

# Principal-angle threshold for subspace equality.
ANGLE_TOL = 1e-9


def graph_subspace(M: np.ndarray) -> LinearSubspace:
    """{(f, Mf)} ⊂ F×E."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[0] != M.shape[1]:
        raise DimensionError(f"graph map must be square, got {M.shape}")
    return LinearSubspace.from_spanning(np.vstack([np.eye(M.shape[0]), M]))


def product_subspace(K: np.ndarray) -> LinearSubspace:
    """K × K^⊥ for K ⊂ F given by spanning columns."""
    K = np.asarray(K, dtype=float)
    if K.ndim == 1:
        K = K.reshape(-1, 1)
    n = K.shape[0]
    K_basis = la.orth(K) if np.any(K) else np.zeros((n, 0))
    K_perp = nullspace(K_basis.T) if K_basis.shape[1] else np.eye(n)
    top = np.hstack([K_basis, np.zeros((n, K_perp.shape[1]))])
    bottom = np.hstack([np.zeros((n, K_basis.shape[1])), K_perp])
    return LinearSubspace.from_spanning(np.vstack([top, bottom]))


def subspaces_equal(S1: LinearSubspace, S2: LinearSubspace, tol: float = ANGLE_TOL) -> bool:
    """Equal dimension and largest principal angle ≤ tol."""
    if S1.ambient_dim != S2.ambient_dim or S1.dim != S2.dim:
        return False
    if S1.dim == 0:
        return True
    return bool(np.max(la.subspace_angles(S1.basis, S2.basis)) <= tol)


def orthogonal_companion(S: LinearSubspace, form: PairingForm = PairingForm.SYMPLECTIC) -> LinearSubspace:
    """{v : ω(v, w) = 0 for all w ∈ S}; its dimension is 2n - dim S."""
    M = PairingForms.matrix(form, S.n)
    if S.dim == 0:
        return LinearSubspace(np.eye(S.ambient_dim))
    return LinearSubspace(nullspace((M @ S.basis).T))


def is_lagrangian(S: LinearSubspace) -> bool:
    return S.dim == S.n and subspaces_equal(orthogonal_companion(S, PairingForm.SYMPLECTIC), S)


def is_dirac(S: LinearSubspace) -> bool:
    return S.dim == S.n and subspaces_equal(orthogonal_companion(S, PairingForm.PLUS), S)


def separable_test(S: LinearSubspace) -> SeparableResult:
    """
    A Dirac structure is K × K^⊥ iff ⟨e_b, f_a⟩ = 0 for all basis pairs;
    K is then the projection of S onto F.

    Raises:
        NotDirac: If S is not a Dirac structure
    """
    if not is_dirac(S):
        raise NotDirac("separability is defined for Dirac structures only")
    cross = S.e_part.T @ S.f_part
    cross_norm = fro(cross)
    separable = cross_norm <= settings.feas_tol
    K = la.orth(S.f_part) if separable else None
    return SeparableResult(separable=bool(separable), K=K, cross_pairing=cross_norm)


def hybrid_representation(S: LinearSubspace) -> HybridRepresentation:
    """
    (e¹, f²) = S_h (f¹, e²) for a Lagrangian subspace.

    I1 indexes a maximal independent set of rows of the F-part, chosen
    by pivoted QR; the remaining indices form I2. This split always
    parametrizes a Lagrangian subspace, and S_h satisfies ΣS_h = S_hᵀΣ
    with Σ = diag(I, -I).

    Raises:
        NotLagrangian: If S is not Lagrangian
    """
    if not is_lagrangian(S):
        raise NotLagrangian("hybrid representation needs a Lagrangian subspace")
    n = S.n
    F_b, E_b = S.f_part, S.e_part
    r = rank(F_b, 1e-9)
    if r:
        _, _, piv = la.qr(F_b.T, pivoting=True)
        I1 = tuple(sorted(int(i) for i in piv[:r]))
    else:
        I1 = ()
    I2 = tuple(i for i in range(n) if i not in I1)
    I1_idx, I2_idx = list(I1), list(I2)

    param = np.vstack([F_b[I1_idx], E_b[I2_idx]])
    image = np.vstack([E_b[I1_idx], F_b[I2_idx]])
    S_h = np.linalg.solve(param.T, image.T).T
    signature = np.diag(np.concatenate([np.ones(len(I1)), -np.ones(len(I2))]))
    residual = fro(signature @ S_h - S_h.T @ signature)
    logger.debug(f"hybrid split I1={I1} I2={I2} residual={residual:.2e}")
    return HybridRepresentation(I1=I1, I2=I2, S_h=S_h, signature=signature, residual=residual)


def from_hybrid(rep: HybridRepresentation) -> LinearSubspace:
    """Subspace spanned by (f, e) with (f¹, e²) free and (e¹, f²) = S_h (f¹, e²)."""
    I1, I2 = list(rep.I1), list(rep.I2)
    n = len(I1) + len(I2)
    k = len(I1)
    out = rep.S_h @ np.eye(n)
    vectors = np.zeros((2 * n, n))
    vectors[I1] = np.eye(n)[:k]
    vectors[[n + i for i in I2]] = np.eye(n)[k:]
    vectors[[n + i for i in I1]] = out[:k]
    vectors[I2] = out[k:]
    return LinearSubspace.from_spanning(vectors)


def kernel_representation(S: LinearSubspace) -> KernelRepresentation:
    """
    D = ker [F E] with FEᵀ + EFᵀ = 0.

    For a Dirac structure the annihilator of D is ΠD, so F = E_bᵀ and
    E = F_bᵀ for an orthonormal basis (F_b; E_b) of D.

    Raises:
        NotDirac: If S is not a Dirac structure
    """
    if not is_dirac(S):
        raise NotDirac("kernel representation needs a Dirac structure")
    F = S.e_part.T.copy()
    E = S.f_part.T.copy()
    residual = max(fro(F @ E.T + E @ F.T), fro(np.hstack([F, E]) @ S.basis))
    return KernelRepresentation(F=F, E=E, residual=residual)


def discretized_hankel_check(
    sys: StateSpaceSystem,
    G=None,
    horizon: Optional[float] = None,
    cells: int = 200,
    seed: Optional[int] = None,
) -> HankelCheckReport:
    """
    Grid matrix H of σℋ on piecewise-constant inputs and the two claims of
    the Hankel behavior: H is symmetric, and the graph {(û, Hû)} annihilates
    ω((û₁, y₁), (û₂, y₂)) = ⟨û₁, y₂⟩ - ⟨û₂, y₁⟩.

    Raises:
        NotHurwitz: If A is not Hurwitz
        NotReciprocal: If a G is given and does not certify reciprocity
    """
    if sys.n:
        require_hurwitz(sys.A)
    if G is not None:
        Gm = np.asarray(G.matrix if isinstance(G, Certificate) else G, dtype=float)
        if not certify.check_certificate(sys, CertificateKind.RECIPROCAL, Gm):
            raise NotReciprocal(f"G does not certify reciprocity of {sys.name}")
    if horizon is None:
        horizon = min(lti.default_horizon(sys, cap=settings.grid_horizon_cap), 20.0)
    h = horizon / cells

    if sys.n:
        H = hankel.discretized_hankel_matrix(sys, horizon, h)
    else:
        H = np.zeros((cells * sys.m, cells * sys.m))
    norm = fro(H)
    asymmetry = fro(H - H.T)

    rng = np.random.default_rng(settings.default_seed if seed is None else seed)
    pairs = rng.standard_normal((8, 2, H.shape[0]))
    form_residual = max(
        (abs(u1 @ H @ u2 - u2 @ H @ u1) / (1.0 + np.linalg.norm(u1) * np.linalg.norm(u2) * norm) for u1, u2 in pairs),
        default=0.0,
    )
    operator = DiscretizedOperator(
        times=h * np.arange(cells),
        kernel=H,
        constraint=np.zeros((0, H.shape[0])),
        weights=np.full(cells, h),
    )
    return HankelCheckReport(
        symmetric=bool(asymmetry <= 1e-6 * norm),
        asymmetry=asymmetry,
        form_residual=float(form_residual),
        norm=norm,
        operator=operator,
    )


def _volterra_operator(
    sys: StateSpaceSystem, window: Tuple[float, float], cells: int
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """
    Exact cell integrals of the one-sided kernel Ce^{A(t-τ)}B, τ < t, and
    of the moment constraints ∫e^{-Aτ}Bu(τ)dτ = 0, for inputs constant on
    each cell.

    Returns:
        (K without signature, constraint matrix M, cell start times, h)
    """
    alpha, beta = float(window[0]), float(window[1])
    if beta <= alpha:
        raise DimensionError(f"window must satisfy α < β, got {window}")
    h = (beta - alpha) / cells
    n, m = sys.n, sys.m
    starts = alpha + h * np.arange(cells)

    Ad, Phi1, Phi2 = lti.cell_integrals(sys.A, h)
    lags = [Phi1 @ sys.B]
    step = np.eye(n)
    for _ in range(1, cells):
        lags.append(Phi1 @ step @ Phi1 @ sys.B)
        step = step @ Ad
    diagonal = sys.C @ Phi2 @ sys.B

    K = np.zeros((cells, m, cells, m))
    for i in range(cells):
        K[i, :, i, :] = diagonal
        for j in range(i):
            K[i, :, j, :] = sys.C @ lags[i - j]
    K = K.reshape(cells * m, cells * m)

    _, Psi, _ = lti.cell_integrals(-sys.A, h)
    M = np.hstack([matrix_exponential(-sys.A, tau) @ Psi @ sys.B for tau in starts])
    return K, M, starts, h


def _require_volterra_inputs(sys: StateSpaceSystem, Omega) -> None:
    if fro(sys.D) > settings.feas_tol:
        raise FeedthroughNonzero("the constrained Volterra operator requires D = 0")
    if Omega is not None:
        Om = np.asarray(Omega.matrix if isinstance(Omega, Certificate) else Omega, dtype=float)
        if not certify.check_certificate(sys, CertificateKind.IO_HAMILTONIAN, Om):
            raise Infeasible(f"Ω does not certify the IO Hamiltonian structure of {sys.name}", residual=None)


def constrained_volterra_check(
    sys: StateSpaceSystem,
    Omega=None,
    window: Sequence[float] = (0.0, 1.0),
    cells: int = 200,
    constrained: bool = True,
) -> VolterraReport:
    """
    Symmetry and definiteness of the Volterra operator restricted to inputs
    whose response has support in the window.

    V = diag(σ)K is lower block triangular; on U = ker M it is symmetric
    for IO Hamiltonian systems, and the sign of Uᵀ(V + Vᵀ)U/2 decides
    nonnegativity of the generating functional ½∫uᵀσy dt.

    Raises:
        FeedthroughNonzero: If D ≠ 0
    """
    _require_volterra_inputs(sys, Omega)
    K, M, starts, h = _volterra_operator(sys, tuple(window), cells)
    V = np.kron(np.eye(cells), sys.Sigma) @ K
    U = nullspace(M) if constrained and M.size else np.eye(V.shape[0])

    restricted = U.T @ V @ U
    asymmetry = fro(restricted - restricted.T)
    symmetric = asymmetry <= 1e-6 * fro(restricted)
    lam, vecs = np.linalg.eigh(0.5 * (restricted + restricted.T))
    tol = 1e-9 * max(np.max(np.abs(lam), initial=0.0), np.finfo(float).tiny)
    label = "psd" if lam.size == 0 or lam[0] >= -tol else "indefinite"
    nonpositive = bool(lam.size) and lam[-1] <= tol
    operator = DiscretizedOperator(times=starts, kernel=V, constraint=M, weights=np.full(cells, h))
    logger.info(
        f"{sys.name}: constrained Volterra on {cells} cells: symmetric={symmetric}, "
        f"{label} (eigenvalues in [{lam[0] if lam.size else 0:.3e}, {lam[-1] if lam.size else 0:.3e}])"
    )
    return VolterraReport(
        symmetric=bool(symmetric),
        asymmetry=asymmetry,
        definiteness=label,
        nonpositive=bool(nonpositive),
        min_eigenvalue=float(lam[0]) if lam.size else 0.0,
        max_eigenvalue=float(lam[-1]) if lam.size else 0.0,
        constrained_dim=int(U.shape[1]),
        operator=operator,
        negative_witness=U @ vecs[:, 0] if lam.size and lam[0] < -tol else None,
        positive_witness=U @ vecs[:, -1] if lam.size and lam[-1] > tol else None,
    )


def volterra_output(sys: StateSpaceSystem, u: np.ndarray, window: Sequence[float] = (0.0, 1.0)) -> np.ndarray:
    """Cell averages of y(t) = ∫_{τ<t} Ce^{A(t-τ)}Bu(τ)dτ for cellwise-constant u; shape (cells, m)."""
    u = np.asarray(u, dtype=float).reshape(-1, sys.m)
    K, _, _, h = _volterra_operator(sys, tuple(window), u.shape[0])
    return (K @ u.reshape(-1) / h).reshape(-1, sys.m)


def generating_functional_value(
    sys: StateSpaceSystem,
    Omega,
    u: np.ndarray,
    window: Sequence[float] = (0.0, 1.0),
) -> float:
    """
    ½∫uᵀσy dt for a cellwise-constant u satisfying the moment constraints.

    Raises:
        ConstraintViolated: If u violates ∫e^{-Aτ}Bu(τ)dτ = 0
        FeedthroughNonzero: If D ≠ 0
    """
    _require_volterra_inputs(sys, Omega)
    u = np.asarray(u, dtype=float).reshape(-1, sys.m)
    cells = u.shape[0]
    _, M, _, h = _volterra_operator(sys, tuple(window), cells)
    violation = float(np.linalg.norm(M @ u.reshape(-1)))
    if violation > settings.feas_tol * (1.0 + fro(M) * np.linalg.norm(u)):
        raise ConstraintViolated(f"input violates the moment constraints (‖Mu‖ = {violation:.3e})", violation=violation)
    y = volterra_output(sys, u, window)
    return 0.5 * h * float(np.einsum("km,m,km->", u, sys.sigma, y))


def volterra_gradient_check(
    sys: StateSpaceSystem,
    Omega=None,
    window: Sequence[float] = (0.0, 1.0),
    cells: int = 100,
    directions: int = 5,
    seed: Optional[int] = None,
) -> float:
    """
    Within ker M, the derivative of 𝔙(u) = ½uᵀVu along d equals hΣdᵢᵀσyᵢ.

    Returns:
        Max relative discrepancy over random constrained directions
    """
    _require_volterra_inputs(sys, Omega)
    K, M, _, h = _volterra_operator(sys, tuple(window), cells)
    V = np.kron(np.eye(cells), sys.Sigma) @ K
    U = nullspace(M) if M.size else np.eye(V.shape[0])
    rng = np.random.default_rng(settings.default_seed if seed is None else seed)
    u = U @ rng.standard_normal(U.shape[1])
    y = volterra_output(sys, u, window)
    weighted = h * (y * sys.sigma).reshape(-1)

    def functional(v: np.ndarray) -> float:
        return 0.5 * float(v @ V @ v)

    eps = 1e-5 * max(1.0, np.linalg.norm(u))
    worst = 0.0
    for _ in range(directions):
        d = U @ rng.standard_normal(U.shape[1])
        d /= np.linalg.norm(d)
        numeric = (functional(u + eps * d) - functional(u - eps * d)) / (2 * eps)
        exact = float(d @ weighted)
        worst = max(worst, abs(numeric - exact) / (1.0 + abs(exact)))
    return worst
