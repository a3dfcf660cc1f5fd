"""
Canonical-form constructors.

Every constructor returns coordinates together with the transformed
blocks; transfer-matrix preservation is the caller-visible contract and
is checked by the test suite on sampled frequencies.
"""
from typing import Dict, Mapping, Tuple, Union

import numpy as np
import scipy.linalg as la
from loguru import logger

from app.exceptions import (
    AsymmetricP,
    BlockDefinitenessFailed,
    EigenspaceImbalance,
    FeedthroughNonzero,
    NormalFormMismatch,
    NotCompatible,
    NotRelaxation,
    SignatureNotIdentity,
)
from app.models.certificate import Certificate, CertificateKind, Definiteness
from app.models.forms import (
    CompatibleCoordinates,
    DerivativeOutputForm,
    FactorizationForm,
    NormalForm,
    PortHamiltonianForm,
    PseudoGradientForm,
)
from app.models.storage import StorageCertificate
from app.models.subspace import PairingForms
from app.models.system import StateSpaceSystem
from app.services import certify, lti
from app.services.matcore import (
    definiteness,
    fro,
    is_invertible,
    is_psd,
    psd_sqrt,
    solve_care,
)
from config.settings import settings

MatrixLike = Union[np.ndarray, Certificate, StorageCertificate]

# Eigenspaces of involutions are read off with this rank threshold, scaled by max(1, ‖N‖).
EIGENSPACE_RCOND = 1e-8


def _matrix(value: MatrixLike) -> np.ndarray:
    if isinstance(value, Certificate):
        return np.asarray(value.matrix, dtype=float)
    if isinstance(value, StorageCertificate):
        return np.asarray(value.Q, dtype=float)
    return np.asarray(value, dtype=float)


def _close(M: np.ndarray, scale: float = 1.0) -> bool:
    return fro(M) <= settings.feas_tol * max(1.0, scale)


def _eigenspace(N: np.ndarray, sign: float) -> np.ndarray:
    """Orthonormal basis of {x : Nx = sign·x} with an absolute rank threshold."""
    n = N.shape[0]
    _, s, Vt = np.linalg.svd(N - sign * np.eye(n))
    cutoff = EIGENSPACE_RCOND * max(1.0, fro(N))
    return Vt[int(np.sum(s > cutoff)):].T


def to_pseudo_gradient(sys: StateSpaceSystem, G: MatrixLike) -> PseudoGradientForm:
    """
    Gẋ = -Px + Cᵀσu with P = -GA.

    Raises:
        AsymmetricP: If -GA is not symmetric, i.e. G does not certify
            reciprocity of sys
    """
    Gm = _matrix(G)
    P = -Gm @ sys.A
    asymmetry = fro(P - P.T)
    if asymmetry > settings.feas_tol * (1.0 + fro(P)):
        raise AsymmetricP(f"P = -GA is not symmetric (asymmetry {asymmetry:.3e})", asymmetry=asymmetry)
    return PseudoGradientForm(G=Gm, P=0.5 * (P + P.T), C=sys.C.copy(), D=sys.D.copy(), sigma=sys.sigma.copy())


def compatible_coordinates(G: MatrixLike, Q: MatrixLike) -> CompatibleCoordinates:
    """
    Coordinates x = T x̃ with TᵀQT = diag(Q1, Q2) and TᵀGT = diag(Q1, -Q2).

    T stacks bases of the +1 and -1 eigenspaces of the involution Q⁻¹G.

    Raises:
        NotCompatible: If Q is singular or Q ≠ GQ⁻¹G
    """
    Gm, Qm = _matrix(G), _matrix(Q)
    n = Qm.shape[0]
    if not is_invertible(Qm):
        raise NotCompatible("storage matrix is singular")
    defect = fro(Qm - Gm @ np.linalg.solve(Qm, Gm))
    if defect > settings.feas_tol * max(1.0, fro(Qm)):
        raise NotCompatible(f"Q ≠ GQ⁻¹G (defect {defect:.3e})", defect=defect)

    N = np.linalg.solve(Qm, Gm)
    plus = _eigenspace(N, 1.0)
    minus = _eigenspace(N, -1.0)
    if plus.shape[1] + minus.shape[1] != n:
        raise NotCompatible(f"Q⁻¹G is not diagonalizable with eigenvalues ±1 ({plus.shape[1]} + {minus.shape[1]} ≠ {n})")
    T = np.hstack([plus, minus])

    QT = T.T @ Qm @ T
    k = plus.shape[1]
    Q1, Q2 = QT[:k, :k], QT[k:, k:]
    Q1, Q2 = 0.5 * (Q1 + Q1.T), 0.5 * (Q2 + Q2.T)
    GT = T.T @ Gm @ T
    residual = max(
        fro(QT - la.block_diag(Q1, Q2)),
        fro(GT - la.block_diag(Q1, -Q2)),
    )
    if residual > 1e-9 * max(1.0, fro(Qm)) * max(1.0, fro(T)) ** 2:
        raise NotCompatible(f"transformed blocks are not diagonal (residual {residual:.3e})")
    return CompatibleCoordinates(T=T, Q1=Q1, Q2=Q2)


def to_port_hamiltonian(sys: StateSpaceSystem, G: MatrixLike, Q: MatrixLike) -> PortHamiltonianForm:
    """
    Two-energy-domain port-Hamiltonian form of a passive reciprocal system.

    In compatible coordinates the pseudo-gradient equations read
    diag(Q1, -Q2)x̃' = -P̃x̃ + C̃ᵀu; flipping the sign of the second group
    and setting z = diag(Q1, Q2)x̃ gives

        ż = ([[0, -Pc], [Pcᵀ, 0]] - diag(P1, -P2)) diag(Q1⁻¹, Q2⁻¹) z + g u

    with g = [C1ᵀ; 0].

    Raises:
        SignatureNotIdentity: If σ ≠ I
        BlockDefinitenessFailed: If P1 ⪰ 0, P2 ⪯ 0 or C2 = 0 fails
    """
    if not sys.sigma_is_identity:
        raise SignatureNotIdentity("port-Hamiltonian conversion requires σ = I")
    Gm, Qm = _matrix(G), _matrix(Q)
    coords = compatible_coordinates(Gm, Qm)
    T = coords.T
    k = coords.Q1.shape[0]

    tilde = lti.similarity_transform(sys, T)
    G_tilde = la.block_diag(coords.Q1, -coords.Q2)
    P = -G_tilde @ tilde.A
    if fro(P - P.T) > settings.feas_tol * (1.0 + fro(P)):
        raise AsymmetricP("G does not certify reciprocity of the system")
    P = 0.5 * (P + P.T)
    P1, Pc, P2 = P[:k, :k], P[:k, k:], P[k:, k:]
    C1, C2 = tilde.C[:, :k], tilde.C[:, k:]

    if not is_psd(P1, settings.feas_tol):
        raise BlockDefinitenessFailed("P1 is not positive semidefinite; system is not passive")
    if not is_psd(-P2, settings.feas_tol):
        raise BlockDefinitenessFailed("P2 is not negative semidefinite; system is not passive")
    if not _close(C2, fro(tilde.C)):
        raise BlockDefinitenessFailed(f"output acts on the second energy domain (‖C2‖ = {fro(C2):.3e})")

    n = sys.n
    J = np.zeros((n, n))
    J[:k, k:] = -Pc
    J[k:, :k] = Pc.T
    R = la.block_diag(P1, -P2)
    g = np.vstack([C1.T, np.zeros((n - k, sys.m))])
    z_map = la.block_diag(coords.Q1, coords.Q2) @ np.linalg.inv(T)
    logger.info(f"{sys.name}: port-Hamiltonian form with energy domains of size {k} and {n - k}")
    return PortHamiltonianForm(
        T=z_map, J=J, R=R, Q1=coords.Q1, Q2=coords.Q2,
        P1=P1, P2=P2, Pc=Pc, g=g, D=sys.D.copy(),
    )


def relaxation_port_form(sys: StateSpaceSystem, G: MatrixLike) -> PortHamiltonianForm:
    """
    Single-domain form ż = -PG⁻¹z + Cᵀu, y = CG⁻¹z + Du with z = Gx.

    Raises:
        NotRelaxation: If σ ≠ I, G is not positive definite or G does not
            certify reciprocity
    """
    Gm = _matrix(G)
    if not sys.sigma_is_identity:
        raise NotRelaxation("relaxation systems have σ = I")
    if definiteness(Gm) != Definiteness.POSDEF:
        raise NotRelaxation(f"G is {definiteness(Gm).value}, not positive definite")
    if not certify.check_certificate(sys, CertificateKind.RECIPROCAL, Gm):
        raise NotRelaxation("G does not certify reciprocity of the system")

    P = to_pseudo_gradient(sys, Gm).P
    n = sys.n
    empty = np.zeros((0, 0))
    return PortHamiltonianForm(
        T=Gm.copy(), J=np.zeros((n, n)), R=P, Q1=Gm.copy(), Q2=empty,
        P1=P, P2=empty, Pc=np.zeros((n, 0)), g=sys.C.T.copy(), D=sys.D.copy(),
    )


def lossless_two_domain_form(
    sys: StateSpaceSystem, G: MatrixLike, Q: MatrixLike
) -> Tuple[PortHamiltonianForm, np.ndarray]:
    """
    Port-Hamiltonian form of a lossless reciprocal system with Q ≻ 0.

    Returns:
        (form with R = 0, the reversal Q⁻¹G in compatible coordinates,
        equal to diag(I, -I))

    Raises:
        BlockDefinitenessFailed: If Q is not positive definite or the form
            has dissipation
    """
    Qm, Gm = _matrix(Q), _matrix(G)
    if definiteness(Qm) != Definiteness.POSDEF:
        raise BlockDefinitenessFailed("lossless two-domain form needs Q ≻ 0")
    form = to_port_hamiltonian(sys, Gm, Qm)
    if not _close(form.R, fro(form.J)):
        raise BlockDefinitenessFailed(f"dissipation is nonzero (‖R‖ = {fro(form.R):.3e})")
    coords = compatible_coordinates(Gm, Qm)
    reversal = np.linalg.solve(coords.T, np.linalg.solve(Qm, Gm) @ coords.T)
    return form, reversal


def io_ham_to_port_ham(sys: StateSpaceSystem, Omega: MatrixLike) -> DerivativeOutputForm:
    """
    Replace the output of an IO Hamiltonian system by its derivative:
    ẋ = JQx - JCᵀu, z = CJQx - CJCᵀu with J = Ω⁻¹, Q = ΩA.

    The energy ½xᵀQx then satisfies d/dt ½xᵀQx = zᵀu, which rests on
    QJQ and CJCᵀ being skew.

    Raises:
        FeedthroughNonzero: If D ≠ 0
        SignatureNotIdentity: If σ ≠ I
    """
    if not _close(sys.D):
        raise FeedthroughNonzero("derivative output form requires D = 0")
    if not sys.sigma_is_identity:
        raise SignatureNotIdentity("derivative output form requires σ = I")
    Om = _matrix(Omega)
    J = np.linalg.inv(Om)
    Q = Om @ sys.A
    Q = 0.5 * (Q + Q.T)
    QJQ = Q @ J @ Q
    CJC = sys.C @ J @ sys.C.T
    return DerivativeOutputForm(
        J=J,
        Q=Q,
        A=J @ Q,
        B=-J @ sys.C.T,
        C=sys.C @ J @ Q,
        D=-CJC,
        energy_skew_residual=fro(QJQ + QJQ.T),
        feedthrough_skew_residual=fro(CJC + CJC.T),
    )


def _pivoted_columns(M: np.ndarray, r: int) -> np.ndarray:
    _, _, piv = la.qr(M, pivoting=True, mode="economic")
    return M[:, np.sort(piv[:r])]


def symplectic_basis(Omega: np.ndarray, N: np.ndarray) -> np.ndarray:
    """
    T = [Tq, Tp] with TᵀΩT = [[0, -I], [I, 0]] and N Tq = Tq, N Tp = -Tp,
    for an anti-symplectic involution N (NᵀΩN = -Ω).

    Tq is chosen from columns of (I + N)/2 by pivoted QR; Tp is the -1
    eigenspace rescaled against Tq through the pairing.

    Raises:
        EigenspaceImbalance: If the ±1 eigenspaces differ in dimension
    """
    n = N.shape[0]
    P_plus = 0.5 * (np.eye(n) + N)
    P_minus = 0.5 * (np.eye(n) - N)
    r_plus = _eigenspace(N, 1.0).shape[1]
    r_minus = _eigenspace(N, -1.0).shape[1]
    if r_plus != r_minus or r_plus + r_minus != n:
        raise EigenspaceImbalance(
            f"eigenspaces of the involution have dimensions {r_plus} and {r_minus} (n={n})",
            plus=r_plus, minus=r_minus,
        )
    Tq = _pivoted_columns(P_plus, r_plus)
    E_minus = _pivoted_columns(P_minus, r_minus)
    pairing = Tq.T @ Omega @ E_minus
    Tp = E_minus @ (-np.linalg.inv(pairing))
    return np.hstack([Tq, Tp])


def _normal_form_coordinates(sys: StateSpaceSystem, Omega: np.ndarray, N: np.ndarray):
    T = symplectic_basis(Omega, N)
    k = sys.n // 2
    Omega_tilde = T.T @ Omega @ T
    canonical = PairingForms.symplectic(k)
    form_defect = fro(Omega_tilde - canonical) / max(1.0, fro(Omega) * fro(T) ** 2)
    if form_defect > 1e-9:
        raise NormalFormMismatch(f"transformed Ω is not canonical (defect {form_defect:.3e})")
    return T, k, canonical, lti.similarity_transform(sys, T)


def nonneg_normal_form(sys: StateSpaceSystem, Omega: MatrixLike, W: MatrixLike) -> NormalForm:
    """
    (q, p) coordinates of a nonnegative IO Hamiltonian system, in which
    Ω = [[0, -I], [I, 0]], W = [[0, I], [I, 0]] and

        A = [[F, -P], [-S, -Fᵀ]],  B = [0; Hᵀ],  C = [H, 0].

    Raises:
        EigenspaceImbalance: If Ω⁻¹W has unequal ±1 eigenspaces
        NormalFormMismatch: If the transformed system misses the block pattern
    """
    Om, Wm = _matrix(Omega), _matrix(W)
    N = np.linalg.solve(Om, Wm)
    T, k, canonical, tilde = _normal_form_coordinates(sys, Om, N)
    A, B, C = tilde.A, tilde.B, tilde.C
    F = A[:k, :k]
    P = -A[:k, k:]
    S = -A[k:, :k]
    H = B[k:].T

    scale = lti.system_scale(tilde)
    defects = {
        "A22 + A11ᵀ": fro(A[k:, k:] + F.T),
        "B1": fro(B[:k]),
        "C2": fro(C[:, k:]),
        "C1 - H": fro(C[:, :k] - H),
        "P - Pᵀ": fro(P - P.T),
        "S - Sᵀ": fro(S - S.T),
    }
    worst = max(defects.values()) / scale
    if worst > settings.feas_tol:
        bad = max(defects, key=defects.get)
        raise NormalFormMismatch(f"block pattern violated at {bad} (relative defect {worst:.3e})")

    W_tilde = T.T @ Wm @ T
    w_defect = fro(W_tilde - PairingForms.plus(k)) / max(1.0, fro(Wm) * fro(T) ** 2)
    logger.debug(f"{sys.name}: nonnegative normal form, block defect {worst:.2e}, W defect {w_defect:.2e}")
    return NormalForm(
        T=T,
        Omega=canonical,
        system=tilde,
        blocks={"F": F, "P": 0.5 * (P + P.T), "S": 0.5 * (S + S.T), "H": H, "W": W_tilde},
        structure_residual=float(max(worst, w_defect)),
    )


def time_reversible_normal_form(sys: StateSpaceSystem, Omega: MatrixLike, R: MatrixLike) -> NormalForm:
    """
    Coordinates with Ω = [[0, -I], [I, 0]], R = diag(I, -I) in which

        [q̇; ṗ] = [[0, P], [-Q, 0]][q; p] + [0; B̃]u,  y = [σB̃ᵀ, 0][q; p].

    Raises:
        NormalFormMismatch: If RᵀΩR ≠ -Ω or the block pattern fails
        EigenspaceImbalance: If R has unequal ±1 eigenspaces
    """
    Om, Rm = _matrix(Omega), _matrix(R)
    defect = fro(Rm.T @ Om @ Rm + Om)
    if defect > settings.feas_tol * max(1.0, fro(Om) * fro(Rm) ** 2):
        raise NormalFormMismatch(f"RᵀΩR ≠ -Ω (defect {defect:.3e})")
    T, k, canonical, tilde = _normal_form_coordinates(sys, Om, Rm)
    A, B, C = tilde.A, tilde.B, tilde.C
    P = A[:k, k:]
    Q = -A[k:, :k]
    B_tilde = B[k:]

    scale = lti.system_scale(tilde)
    defects = {
        "A11": fro(A[:k, :k]),
        "A22": fro(A[k:, k:]),
        "B1": fro(B[:k]),
        "C2": fro(C[:, k:]),
        "C1 - σB̃ᵀ": fro(C[:, :k] - sys.Sigma @ B_tilde.T),
        "P - Pᵀ": fro(P - P.T),
        "Q - Qᵀ": fro(Q - Q.T),
    }
    worst = max(defects.values()) / scale
    if worst > settings.feas_tol:
        bad = max(defects, key=defects.get)
        raise NormalFormMismatch(f"block pattern violated at {bad} (relative defect {worst:.3e})")
    return NormalForm(
        T=T,
        Omega=canonical,
        system=tilde,
        blocks={"P": 0.5 * (P + P.T), "Q": 0.5 * (Q + Q.T), "B": B_tilde},
        structure_residual=float(worst),
    )


BlockSource = Union[NormalForm, Mapping[str, np.ndarray]]


def _blocks(source: BlockSource) -> Dict[str, np.ndarray]:
    blocks = source.blocks if isinstance(source, NormalForm) else source
    return {key: np.asarray(blocks[key], dtype=float) for key in ("F", "P", "S", "H")}


def riccati_transformation(source: BlockSource, X: np.ndarray = None) -> Tuple[np.ndarray, StateSpaceSystem]:
    """
    Canonical transformation x̃ = [[I, 0], [-X, I]] x of the (q, p) block
    system, giving Ã = [[F - PX, -P], [0, -(F - PX)ᵀ]], B̃ = B, C̃ = C.

    Returns:
        (transformation, transformed system)
    """
    b = _blocks(source)
    F, P, S, H = b["F"], b["P"], b["S"], b["H"]
    if X is None:
        X = solve_care(F, P, S)
    k = F.shape[0]
    T = np.block([[np.eye(k), np.zeros((k, k))], [-X, np.eye(k)]])
    A = np.block([[F, -P], [-S, -F.T]])
    B = np.vstack([np.zeros((k, H.shape[0])), H.T])
    C = np.hstack([H, np.zeros((H.shape[0], k))])
    block_system = StateSpaceSystem(A, B, C, name="riccati")
    return T, lti.similarity_transform(block_system, np.linalg.inv(T))


def spectral_factorize(source: BlockSource) -> FactorizationForm:
    """
    Spectral factorization K(s) = M(s)Mᵀ(-s) of the (q, p) block system
    through the stabilizing solution of FᵀX + XF - XPX + S = 0.

    Raises:
        NotStabilizable: If (F, P) is not stabilizable
        ImaginaryAxisEigenvalue: If the Hamiltonian matrix has imaginary-axis eigenvalues
        NotPositiveSemidefinite: If P is not positive semidefinite
    """
    b = _blocks(source)
    F, P, S, H = b["F"], b["P"], b["S"], b["H"]
    X = solve_care(F, P, S, stable=True)
    P_factor = psd_sqrt(P)
    riccati_residual = fro(F.T @ X + X @ F - X @ P @ X + S)

    form = FactorizationForm(
        F=F, P=P, S=S, H=H, X=X, P_factor=P_factor,
        riccati_residual=riccati_residual, factorization_residual=0.0,
    )
    system = form.hamiltonian_system()
    worst = 0.0
    for s in certify.frequency_samples(system):
        K = lti.transfer(system, s)
        MM = form.M(s) @ form.M(-s).T
        worst = max(worst, fro(K - MM) / (1.0 + fro(K)))
    logger.info(f"spectral factor of order {F.shape[0]}: riccati {riccati_residual:.2e}, factorization {worst:.2e}")
    return FactorizationForm(
        F=F, P=P, S=S, H=H, X=X, P_factor=P_factor,
        riccati_residual=float(riccati_residual), factorization_residual=float(worst),
    )
