"""
Passivity analysis: KYP storage extremes, kernel invariance, the
compatibility fixed point Q = GQ⁻¹G, relaxation classification and the
storage W = ΩW⁻¹Ω of nonnegative IO Hamiltonian systems.

The dissipation inequality is never handed to a semidefinite solver. Only
the Riccati route (D + Dᵀ ≻ 0) and the lossless equality route are
supported; other regimes raise SingularFeedthrough.
"""
from typing import Union

import numpy as np
from loguru import logger

from app.exceptions import (
    FeedthroughNonzero,
    ImaginaryAxisEigenvalue,
    Indefinite,
    Infeasible,
    IterateSingular,
    MatrixEquationError,
    NoConvergence,
    NotMinimal,
    NotPassive,
    NotStabilizable,
    PropositionViolated,
    SignatureNotIdentity,
    SingularFeedthrough,
)
from app.models.certificate import Certificate, Definiteness
from app.models.matrix import SolutionStatus, Symmetry
from app.models.storage import (
    KernelInvarianceReport,
    RelaxationVerdict,
    StorageCertificate,
    StorageKind,
)
from app.models.system import StateSpaceSystem
from app.services import certify, lti
from app.services.matcore import (
    constraint_system,
    definiteness,
    fro,
    is_hurwitz,
    is_invertible,
    is_psd,
    nullspace,
    solve_care,
    solve_structured,
)
from config.settings import settings

MatrixLike = Union[np.ndarray, Certificate, StorageCertificate]


def _matrix(value: MatrixLike) -> np.ndarray:
    if isinstance(value, Certificate):
        return np.asarray(value.matrix, dtype=float)
    if isinstance(value, StorageCertificate):
        return np.asarray(value.Q, dtype=float)
    return np.asarray(value, dtype=float)


def lmi_slack(sys: StateSpaceSystem, Q: MatrixLike) -> np.ndarray:
    """[[-QA - AᵀQ, Cᵀ - QB], [C - BᵀQ, D + Dᵀ]]."""
    Q = _matrix(Q)
    top = np.hstack([-Q @ sys.A - sys.A.T @ Q, sys.C.T - Q @ sys.B])
    bottom = np.hstack([sys.C - sys.B.T @ Q, sys.D + sys.D.T])
    return np.vstack([top, bottom])


def _slack_scale(sys: StateSpaceSystem, Q: np.ndarray) -> float:
    return 1.0 + fro(Q) * (fro(sys.A) + fro(sys.B)) + fro(sys.C) + fro(sys.D)


def slack_feasible(sys: StateSpaceSystem, Q: MatrixLike) -> bool:
    Q = _matrix(Q)
    slack = lmi_slack(sys, Q)
    if slack.size == 0:
        return True
    return bool(np.linalg.eigvalsh(slack)[0] >= -settings.feas_tol * _slack_scale(sys, Q))


def storage_from_matrix(
    sys: StateSpaceSystem,
    Q: MatrixLike,
    kind: StorageKind = StorageKind.GENERIC,
    iterations: int = 0,
) -> StorageCertificate:
    """Evaluate the dissipation slack of any candidate storage matrix."""
    Q = _matrix(Q)
    Q = 0.5 * (Q + Q.T)
    slack = lmi_slack(sys, Q)
    spectrum = np.linalg.eigvalsh(slack) if slack.size else np.zeros(0)
    tol = settings.feas_tol * _slack_scale(sys, Q)
    lossless = bool(spectrum.size == 0 or np.max(np.abs(spectrum)) <= tol)
    return StorageCertificate(
        Q=Q,
        dissipation_residual_spectrum=spectrum,
        lossless=lossless,
        kind=kind,
        iterations=iterations,
    )


def kyp_storage(sys: StateSpaceSystem, objective: str = "min") -> StorageCertificate:
    """
    Extremal storage matrix of a passive system.

    With R0 = D + Dᵀ ≻ 0 the inequality reduces to the positive-real Riccati
    equation in X = -Q with F = A - BR0⁻¹C, P = BR0⁻¹Bᵀ, S = -CᵀR0⁻¹C: the
    stabilizing solution gives the minimal storage, the anti-stabilizing
    one the maximal storage. With D + Dᵀ = 0 the lossless equalities are
    solved instead and the storage is unique.

    Args:
        sys: Minimal system
        objective: "min" or "max"

    Raises:
        NotMinimal: If sys is not minimal
        NotPassive: If no positive semidefinite storage exists
        SingularFeedthrough: If D + Dᵀ is singular and sys is not lossless
    """
    if objective not in ("min", "max"):
        raise ValueError(f"objective must be 'min' or 'max', got {objective!r}")
    if not lti.is_minimal(sys):
        raise NotMinimal(f"{sys.name} is not minimal")
    kind = StorageKind.MIN_STORAGE if objective == "min" else StorageKind.MAX_STORAGE

    R0 = sys.D + sys.D.T
    if definiteness(R0) == Definiteness.POSDEF:
        R0_inv = np.linalg.inv(R0)
        F = sys.A - sys.B @ R0_inv @ sys.C
        P = sys.B @ R0_inv @ sys.B.T
        S = -sys.C.T @ R0_inv @ sys.C
        try:
            X = solve_care(F, 0.5 * (P + P.T), 0.5 * (S + S.T), stable=(objective == "min"))
        except (ImaginaryAxisEigenvalue, NotStabilizable, MatrixEquationError) as exc:
            raise NotPassive(f"positive-real Riccati equation has no {objective} solution: {exc.message}")
        storage = storage_from_matrix(sys, -X, kind)
    elif fro(R0) <= settings.feas_tol * max(1.0, fro(sys.D)):
        try:
            Q = certify.find_cyclo_lossless_Q(sys, require_minimal=False)
        except Infeasible:
            raise SingularFeedthrough("D + Dᵀ = 0 but the lossless equalities are infeasible")
        storage = storage_from_matrix(sys, Q.matrix, kind)
    else:
        raise SingularFeedthrough("D + Dᵀ is singular but nonzero; regime not supported")

    if not slack_feasible(sys, storage.Q):
        raise NotPassive(f"{objective} storage violates the dissipation inequality")
    if not is_psd(storage.Q, settings.feas_tol):
        raise NotPassive(f"{objective} storage matrix is not positive semidefinite")
    logger.info(f"{sys.name}: {kind.value} found (min slack eigenvalue {storage.min_slack_eigenvalue:.2e})")
    return storage


def kernel_invariance_check(sys: StateSpaceSystem, Q: MatrixLike) -> KernelInvarianceReport:
    """
    Verify that ker Q is A-invariant and contained in ker C, and trivial
    for observable systems.

    Raises:
        PropositionViolated: If Q fails the dissipation inequality or any
            kernel property fails
    """
    Qm = _matrix(Q)
    if not slack_feasible(sys, Qm):
        raise PropositionViolated("Q does not satisfy the dissipation inequality")

    K = nullspace(Qm, rcond=max(settings.null_tol, 1e-9))
    scale = max(1.0, fro(sys.A))
    if K.shape[1]:
        drift = sys.A @ K - K @ (K.T @ sys.A @ K)
        a_invariant = fro(drift) <= settings.feas_tol * scale
        in_ker_C = fro(sys.C @ K) <= settings.feas_tol * max(1.0, fro(sys.C))
    else:
        a_invariant = in_ker_C = True
    report = KernelInvarianceReport(
        kernel_basis=K,
        a_invariant=bool(a_invariant),
        in_ker_C=bool(in_ker_C),
        observable=lti.minimality(sys).observable,
    )
    if not report.passed:
        raise PropositionViolated(
            f"kernel of Q (dim {report.kernel_dim}) violates invariance: "
            f"A-invariant={report.a_invariant}, in ker C={report.in_ker_C}, observable={report.observable}"
        )
    return report


def compatible_Q(sys: StateSpaceSystem, G: MatrixLike, Q0: MatrixLike) -> StorageCertificate:
    """
    Iterate Q ← ½(Q + GQ⁻¹G) to a storage matrix compatible with G.

    Iterates are convex combinations of dissipation-inequality solutions,
    so each one is re-verified when Q0 itself is a solution. The final Q
    is always verified.

    Raises:
        IterateSingular: If an iterate loses invertibility
        NoConvergence: If the residual stays above tolerance
        PropositionViolated: If an iterate violates the dissipation inequality
    """
    Gm = _matrix(G)
    Q = _matrix(Q0)
    Q = 0.5 * (Q + Q.T)
    check_iterates = slack_feasible(sys, Q)
    if not check_iterates:
        logger.warning(f"{sys.name}: initial storage is not a dissipation-inequality solution")

    residual = np.inf
    for iteration in range(settings.fixed_point_max_iter + 1):
        if not is_invertible(Q):
            raise IterateSingular(f"iterate {iteration} is singular")
        mirrored = Gm @ np.linalg.solve(Q, Gm)
        mirrored = 0.5 * (mirrored + mirrored.T)
        residual = fro(Q - mirrored)
        if residual <= settings.fixed_point_tol * max(fro(Q), 1e-300):
            break
        if iteration == settings.fixed_point_max_iter:
            raise NoConvergence(f"compatibility map did not converge in {iteration} iterations", residual=residual)
        Q = 0.5 * (Q + mirrored)
        if check_iterates and not slack_feasible(sys, Q):
            raise PropositionViolated(f"iterate {iteration + 1} violates the dissipation inequality")

    if not slack_feasible(sys, Q):
        raise PropositionViolated("compatible storage violates the dissipation inequality")
    logger.debug(f"{sys.name}: compatible storage after {iteration} iterations (residual {residual:.2e})")
    return storage_from_matrix(sys, Q, StorageKind.COMPATIBLE, iterations=iteration)


def relaxation_test(sys: StateSpaceSystem) -> RelaxationVerdict:
    """
    Relaxation system: reciprocal with σ = I and G ≻ 0.

    Also reports whether the potential matrix P = -GA is positive
    semidefinite and the minimum eigenvalue of the dissipation slack at Q = G.

    Raises:
        NotMinimal, NonUnique: If G cannot be decided, so neither can the verdict
    """
    if not sys.sigma_is_identity:
        return RelaxationVerdict(False, None, False, reason="signature is not the identity")
    try:
        G = certify.find_reciprocal_G(sys).matrix
    except Infeasible as exc:
        return RelaxationVerdict(False, None, False, reason=f"not reciprocal: {exc.message}")

    P = -G @ sys.A
    ga_psd = is_psd(0.5 * (P + P.T), settings.feas_tol)
    slack = lmi_slack(sys, G)
    slack_min = float(np.linalg.eigvalsh(slack)[0]) if slack.size else 0.0
    is_relaxation = definiteness(G) == Definiteness.POSDEF
    reason = "" if is_relaxation else f"G is {definiteness(G).value}"
    return RelaxationVerdict(is_relaxation, G, bool(ga_psd), slack_min, reason)


def passivity_of_relaxation(sys: StateSpaceSystem, G: MatrixLike) -> bool:
    """A reciprocal system with G ⪰ 0, A Hurwitz and D = Dᵀ ⪰ 0 is passive with storage G."""
    Gm = _matrix(G)
    if not is_psd(Gm, settings.feas_tol) or not is_hurwitz(sys.A):
        return False
    if fro(sys.D - sys.D.T) > settings.feas_tol * max(1.0, fro(sys.D)) or not is_psd(sys.D, settings.feas_tol):
        return False
    return slack_feasible(sys, Gm)


def _storage_family(sys: StateSpaceSystem):
    """Symmetric W with WB = Cᵀ: particular solution and null basis."""
    constraints = constraint_system(
        (sys.n, sys.n),
        [(lambda X: X @ sys.B, sys.C.T)],
        Symmetry.SYMMETRIC,
    )
    return solve_structured(constraints)


def _dissipation(sys: StateSpaceSystem, W: np.ndarray) -> np.ndarray:
    L = -(W @ sys.A + sys.A.T @ W)
    return 0.5 * (L + L.T)


def io_ham_storage_W(sys: StateSpaceSystem, Omega: MatrixLike) -> StorageCertificate:
    """
    Invertible storage W of a nonnegative IO Hamiltonian system:
    d/dt ½xᵀWx ≤ uᵀy, normalized by the midpoint map W ← ½(W + ΩW⁻¹Ω).

    With D = 0 the inequality means WB = Cᵀ and -(WA + AᵀW) ⪰ 0. A feasible
    W is searched by alternating projections between the affine family
    WB = Cᵀ and the cone of positive semidefinite dissipation matrices.
    On success N = Ω⁻¹W is certified to be an involution with
    NᵀΩN = -Ω.

    Raises:
        FeedthroughNonzero: If D ≠ 0
        SignatureNotIdentity: If σ ≠ I
        Indefinite: If no storage exists
    """
    Om = _matrix(Omega)
    if fro(sys.D) > settings.feas_tol:
        raise FeedthroughNonzero("storage W requires D = 0")
    if not sys.sigma_is_identity:
        raise SignatureNotIdentity("storage W requires σ = I")
    n = sys.n
    if n == 0:
        return storage_from_matrix(sys, np.zeros((0, 0)))

    family = _storage_family(sys)
    if family.status == SolutionStatus.INFEASIBLE:
        raise Indefinite("no PSD storage: WB = Cᵀ has no symmetric solution")
    basis = family.null_basis
    images = np.array([_dissipation(sys, N_k).reshape(-1) for N_k in basis]).T if len(basis) else np.zeros((n * n, 0))
    offset = _dissipation(sys, family.particular).reshape(-1)

    coeffs = np.zeros(len(basis))
    W = family.particular
    tol = settings.feas_tol * max(1.0, fro(sys.A) * max(1.0, fro(W)))
    for iteration in range(settings.projection_max_iter):
        W = family.particular + np.tensordot(coeffs, basis, axes=1) if len(basis) else family.particular
        L = _dissipation(sys, W)
        lam, V = np.linalg.eigh(L)
        if lam[0] >= -tol:
            break
        if not len(basis):
            raise Indefinite(f"no PSD storage: dissipation has eigenvalue {lam[0]:.3e}")
        target = (V * np.clip(lam, 0.0, None)) @ V.T
        new_coeffs, *_ = np.linalg.lstsq(images, target.reshape(-1) - offset, rcond=None)
        if np.linalg.norm(new_coeffs - coeffs) <= 1e-14 * max(1.0, np.linalg.norm(coeffs)):
            raise Indefinite(f"no PSD storage: dissipation stalls at eigenvalue {lam[0]:.3e}")
        coeffs = new_coeffs
    else:
        raise Indefinite(f"no PSD storage found in {settings.projection_max_iter} projection steps")

    if not is_invertible(W):
        raise IterateSingular("feasible storage is singular")

    residual = np.inf
    for step in range(settings.fixed_point_max_iter + 1):
        mirrored = Om @ np.linalg.solve(W, Om)
        mirrored = 0.5 * (mirrored + mirrored.T)
        residual = fro(W - mirrored)
        if residual <= settings.fixed_point_tol * fro(W):
            break
        if step == settings.fixed_point_max_iter:
            raise NoConvergence("storage midpoint map did not converge", residual=residual)
        W = 0.5 * (W + mirrored)
        if not is_invertible(W):
            raise IterateSingular(f"storage iterate {step + 1} is singular")

    N = np.linalg.solve(Om, W)
    involution = fro(N @ N - np.eye(n))
    anti_symplectic = fro(N.T @ Om @ N + Om)
    if involution > 1e-8 * max(1.0, fro(N) ** 2) or anti_symplectic > 1e-8 * max(1.0, fro(Om) * fro(N) ** 2):
        raise PropositionViolated(
            f"Ω⁻¹W is not an anti-symplectic involution (defects {involution:.2e}, {anti_symplectic:.2e})"
        )
    logger.info(f"{sys.name}: storage W found after {iteration} projections and {step} midpoint steps")
    return storage_from_matrix(sys, W, StorageKind.GENERIC, iterations=step)
