"""
Structure certificates G, Ω, R and Q.

Each certificate is the solution of a structured linear matrix equation.
Accepted certificates are re-verified algebraically and against the
corresponding transfer-matrix identity on a fixed frequency sample set.
"""
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy.integrate import trapezoid

from app.exceptions import (
    PRECONDITION_ERRORS,
    CompatibilityFailed,
    DimensionError,
    Infeasible,
    KindClash,
    LtiSymError,
    NonUnique,
    NotControllable,
    NotInvolution,
    NotMinimal,
    SingularResolvent,
    ThirdInvalid,
)
from app.models.certificate import Certificate, CertificateKind, VerdictReport
from app.models.matrix import SolutionStatus, Symmetry
from app.models.system import StateSpaceSystem
from app.services import lti
from app.services.matcore import (
    constraint_system,
    definiteness,
    fro,
    is_invertible,
    matrix_exponential,
    require_hurwitz,
    solve_lyapunov,
    solve_structured,
)
from config.settings import settings

Equation = Tuple[Callable[[np.ndarray], np.ndarray], np.ndarray]

_SYMMETRY = {
    CertificateKind.RECIPROCAL: Symmetry.SYMMETRIC,
    CertificateKind.IO_HAMILTONIAN: Symmetry.SKEW,
    CertificateKind.SIGNED_TIME_REVERSIBLE: Symmetry.NONE,
    CertificateKind.TIME_REVERSIBLE: Symmetry.NONE,
    CertificateKind.CYCLO_LOSSLESS: Symmetry.SYMMETRIC,
}

TRIPLE_KINDS = (
    CertificateKind.IO_HAMILTONIAN,
    CertificateKind.RECIPROCAL,
    CertificateKind.TIME_REVERSIBLE,
)


def _equations(sys: StateSpaceSystem, kind: CertificateKind) -> List[Equation]:
    A, B, C = sys.A, sys.B, sys.C
    n = sys.n
    zero = np.zeros((n, n))
    sigma_C = sys.Sigma @ C
    if kind == CertificateKind.RECIPROCAL:
        return [(lambda X: A.T @ X - X @ A, zero), (lambda X: B.T @ X, sigma_C)]
    if kind == CertificateKind.IO_HAMILTONIAN:
        return [(lambda X: A.T @ X + X @ A, zero), (lambda X: B.T @ X, sigma_C)]
    if kind == CertificateKind.SIGNED_TIME_REVERSIBLE:
        return [(lambda X: X @ A + A @ X, zero), (lambda X: X @ B, B), (lambda X: C @ X, C)]
    if kind == CertificateKind.TIME_REVERSIBLE:
        return [(lambda X: X @ A + A @ X, zero), (lambda X: X @ B, -B), (lambda X: C @ X, C)]
    return [(lambda X: A.T @ X + X @ A, zero), (lambda X: B.T @ X, C)]


def feedthrough_residual(sys: StateSpaceSystem, kind: CertificateKind) -> float:
    """Residual of the condition the kind places on D alone."""
    D, S = sys.D, sys.Sigma
    if kind in (CertificateKind.RECIPROCAL, CertificateKind.IO_HAMILTONIAN):
        value = fro(S @ D - D.T @ S)
    elif kind == CertificateKind.SIGNED_TIME_REVERSIBLE:
        value = fro(D)
    elif kind == CertificateKind.CYCLO_LOSSLESS:
        value = fro(D + D.T)
    else:
        return 0.0
    return value / (1.0 + fro(D))


def algebraic_residual(sys: StateSpaceSystem, kind: CertificateKind, M: np.ndarray) -> float:
    """Relative residual of every defining equation of ``kind`` at M."""
    M = np.asarray(M, dtype=float)
    if M.shape != (sys.n, sys.n):
        raise DimensionError(f"certificate must be {sys.n}×{sys.n}, got {M.shape}")
    size = fro(M)
    scale = 1.0 + (1.0 + size) * lti.system_scale(sys)
    equation_error = np.sqrt(sum(fro(f(M) - rhs) ** 2 for f, rhs in _equations(sys, kind)))
    residuals = [equation_error / scale, feedthrough_residual(sys, kind)]
    if kind.symmetric:
        residuals.append(fro(M - M.T) / (1.0 + size))
    elif kind == CertificateKind.IO_HAMILTONIAN:
        residuals.append(fro(M + M.T) / (1.0 + size))
    else:
        residuals.append(fro(M @ M - np.eye(sys.n)) / (1.0 + size ** 2))
    return float(max(residuals))


def frequency_samples(sys: StateSpaceSystem) -> List[complex]:
    """
    s = iω for ω log-spaced in [1e-2, 1e2] plus s = 1 + i, dropping points
    where s or -s lies within eigen_guard of an eigenvalue of A.
    """
    omegas = np.logspace(-2, 2, settings.frequency_points)
    candidates = [1j * w for w in omegas] + [1.0 + 1.0j]
    if sys.n == 0:
        return candidates
    eigs = np.linalg.eigvals(sys.A)
    guard = settings.eigen_guard
    return [
        s for s in candidates
        if np.min(np.abs(eigs - s)) > guard and np.min(np.abs(eigs + s)) > guard
    ]


def _frequency_defect(kind: CertificateKind, sys: StateSpaceSystem, s: complex) -> float:
    S = sys.Sigma
    K = lti.transfer(sys, s)
    if kind == CertificateKind.RECIPROCAL:
        return fro(S @ K - K.T @ S) / (1.0 + 2 * fro(K))
    K_minus = lti.transfer(sys, -s)
    scale = 1.0 + fro(K) + fro(K_minus)
    if kind == CertificateKind.IO_HAMILTONIAN:
        return fro(S @ K - K_minus.T @ S) / scale
    if kind == CertificateKind.SIGNED_TIME_REVERSIBLE:
        return fro(K + K_minus) / scale
    if kind == CertificateKind.TIME_REVERSIBLE:
        return fro(K - K_minus) / scale
    return fro(K + K_minus.T) / scale


def frequency_residual(sys: StateSpaceSystem, kind: CertificateKind, samples: Optional[Sequence[complex]] = None) -> float:
    """Max relative defect of the transfer-matrix identity of ``kind``."""
    samples = frequency_samples(sys) if samples is None else samples
    worst = 0.0
    for s in samples:
        try:
            worst = max(worst, _frequency_defect(kind, sys, s))
        except SingularResolvent:
            logger.debug(f"skipping frequency sample {s}: resolvent singular")
    return float(worst)


def make_certificate(sys: StateSpaceSystem, kind: CertificateKind, M: np.ndarray) -> Certificate:
    """Wrap a candidate matrix with its residuals (no acceptance decision)."""
    M = np.asarray(M, dtype=float)
    return Certificate(
        kind=kind,
        matrix=M,
        algebraic_residual=algebraic_residual(sys, kind, M),
        frequency_residual=frequency_residual(sys, kind),
        definiteness=definiteness(M) if kind.symmetric else None,
    )


def check_certificate(sys: StateSpaceSystem, kind: CertificateKind, M: np.ndarray) -> bool:
    """True when M is invertible and satisfies the defining equations of ``kind``."""
    M = np.asarray(M, dtype=float)
    if M.shape != (sys.n, sys.n) or not is_invertible(M):
        return False
    return algebraic_residual(sys, kind, M) <= settings.feas_tol


def find_certificate(sys: StateSpaceSystem, kind: CertificateKind, require_minimal: bool = False) -> Certificate:
    """
    Solve for the structure matrix of ``kind``.

    Raises:
        Infeasible: If no invertible solution exists
        NonUnique: If the solution set is a family of positive dimension
        NotMinimal: If require_minimal and sys is not minimal
        NotInvolution: If a reversal map solves the equations but R² ≠ I
    """
    if kind == CertificateKind.IO_HAMILTONIAN and sys.n % 2:
        raise Infeasible(f"odd state dimension n={sys.n} admits no invertible skew form", residual=None)

    feed = feedthrough_residual(sys, kind)
    if feed > settings.feas_tol:
        raise Infeasible(f"feedthrough violates the {kind.value} condition", residual=feed)

    if require_minimal and not lti.is_minimal(sys):
        raise NotMinimal(f"{sys.name} is not minimal")

    constraints = constraint_system((sys.n, sys.n), _equations(sys, kind), _SYMMETRY[kind])
    solution = solve_structured(constraints)
    if solution.status == SolutionStatus.INFEASIBLE:
        raise Infeasible(f"no {kind.symbol} satisfies the {kind.value} equations", residual=solution.residual)
    if solution.status == SolutionStatus.FAMILY:
        raise NonUnique(
            f"{kind.symbol} is not unique (family of dimension {solution.family_dim}); system is not minimal",
            family_dim=solution.family_dim,
        )

    M = solution.particular
    if kind.symmetric:
        M = 0.5 * (M + M.T)
    elif kind == CertificateKind.IO_HAMILTONIAN:
        M = 0.5 * (M - M.T)

    if not is_invertible(M):
        raise Infeasible(f"the unique {kind.symbol} is singular", residual=solution.residual)
    if kind in (CertificateKind.SIGNED_TIME_REVERSIBLE, CertificateKind.TIME_REVERSIBLE):
        involution_error = fro(M @ M - np.eye(sys.n))
        if involution_error > settings.feas_tol * (1.0 + fro(M) ** 2):
            raise NotInvolution(f"R² ≠ I (defect {involution_error:.3e}); system is not minimal")

    certificate = make_certificate(sys, kind, M)
    if certificate.algebraic_residual > settings.feas_tol:
        raise Infeasible(f"{kind.symbol} residual too large", residual=certificate.algebraic_residual)
    if certificate.frequency_residual > settings.feas_tol:
        raise Infeasible(
            f"{kind.symbol} fails the frequency cross-check",
            residual=certificate.frequency_residual,
        )
    logger.info(
        f"{sys.name}: {kind.value} certificate {kind.symbol} accepted "
        f"(algebraic {certificate.algebraic_residual:.2e}, frequency {certificate.frequency_residual:.2e})"
    )
    return certificate


def find_reciprocal_G(sys: StateSpaceSystem, require_minimal: bool = False) -> Certificate:
    """G = Gᵀ with AᵀG = GA, BᵀG = σC, σD = Dᵀσ."""
    return find_certificate(sys, CertificateKind.RECIPROCAL, require_minimal)


def find_io_hamiltonian_Omega(sys: StateSpaceSystem, require_minimal: bool = False) -> Certificate:
    """Ω = -Ωᵀ with AᵀΩ + ΩA = 0, BᵀΩ = σC, σD = Dᵀσ; n must be even."""
    return find_certificate(sys, CertificateKind.IO_HAMILTONIAN, require_minimal)


def find_signed_time_reversal(sys: StateSpaceSystem, require_minimal: bool = True) -> Certificate:
    """Involution R with RA = -AR, RB = B, CR = C (and D = 0)."""
    return find_certificate(sys, CertificateKind.SIGNED_TIME_REVERSIBLE, require_minimal)


def find_time_reversal(sys: StateSpaceSystem, require_minimal: bool = True) -> Certificate:
    """Involution R with RA = -AR, RB = -B, CR = C."""
    return find_certificate(sys, CertificateKind.TIME_REVERSIBLE, require_minimal)


def find_cyclo_lossless_Q(sys: StateSpaceSystem, require_minimal: bool = True) -> Certificate:
    """Q = Qᵀ with AᵀQ + QA = 0, BᵀQ = C, D + Dᵀ = 0."""
    return find_certificate(sys, CertificateKind.CYCLO_LOSSLESS, require_minimal)


def two_of_three(sys: StateSpaceSystem, first: Certificate, second: Certificate) -> Certificate:
    """
    Compose the third of {Ω, G, R} from the other two: R = Ω⁻¹G,
    Ω = GR, G = ΩR.

    Raises:
        KindClash: If the kinds are equal or outside {Ω, G, R}
        ThirdInvalid: If an input is not a valid certificate or the
            composition fails its own defining equations
    """
    kinds = {first.kind, second.kind}
    if len(kinds) != 2 or not kinds <= set(TRIPLE_KINDS):
        raise KindClash(f"need two distinct kinds among {[k.value for k in TRIPLE_KINDS]}, got {[k.value for k in (first.kind, second.kind)]}")
    for cert in (first, second):
        if not check_certificate(sys, cert.kind, cert.matrix):
            raise ThirdInvalid(f"input {cert.kind.symbol} is not a valid {cert.kind.value} certificate")

    given = {cert.kind: np.asarray(cert.matrix, dtype=float) for cert in (first, second)}
    (third,) = set(TRIPLE_KINDS) - kinds
    if third == CertificateKind.TIME_REVERSIBLE:
        M = np.linalg.solve(given[CertificateKind.IO_HAMILTONIAN], given[CertificateKind.RECIPROCAL])
    elif third == CertificateKind.IO_HAMILTONIAN:
        M = given[CertificateKind.RECIPROCAL] @ given[CertificateKind.TIME_REVERSIBLE]
        M = 0.5 * (M - M.T)
    else:
        M = given[CertificateKind.IO_HAMILTONIAN] @ given[CertificateKind.TIME_REVERSIBLE]
        M = 0.5 * (M + M.T)

    if not check_certificate(sys, third, M):
        raise ThirdInvalid(f"composed {third.symbol} violates its defining equations")

    full = dict(given)
    full[third] = M
    G, Omega = full[CertificateKind.RECIPROCAL], full[CertificateKind.IO_HAMILTONIAN]
    identity_error = fro(G @ np.linalg.solve(Omega, G) - Omega) / (1.0 + fro(Omega))
    if identity_error > settings.feas_tol:
        raise ThirdInvalid(f"GΩ⁻¹G ≠ Ω (defect {identity_error:.3e})")
    return make_certificate(sys, third, M)


def lossless_reciprocal_reversal(
    sys: StateSpaceSystem,
    Q: Certificate,
    G: Certificate,
) -> Tuple[Certificate, bool, bool]:
    """
    A cyclo-lossless reciprocal system is signed time-reversible with
    R = Q⁻¹G, has D = 0 and Q = GQ⁻¹G.

    Returns:
        (R certificate, D is zero, Q compatible with G)

    Raises:
        CompatibilityFailed: If the certificates do not belong to sys or R
            fails the signed time-reversal equations
    """
    if Q.kind != CertificateKind.CYCLO_LOSSLESS or G.kind != CertificateKind.RECIPROCAL:
        raise CompatibilityFailed("expected a cyclo-lossless Q and a reciprocal G")
    for cert in (Q, G):
        if not check_certificate(sys, cert.kind, cert.matrix):
            raise CompatibilityFailed(f"{cert.kind.symbol} is not a certificate of {sys.name}")

    Qm, Gm = np.asarray(Q.matrix), np.asarray(G.matrix)
    R = np.linalg.solve(Qm, Gm)
    if not check_certificate(sys, CertificateKind.SIGNED_TIME_REVERSIBLE, R):
        raise CompatibilityFailed("R = Q⁻¹G fails the signed time-reversal equations")

    compat = fro(Qm - Gm @ np.linalg.solve(Qm, Gm)) <= settings.feas_tol * max(1.0, fro(Qm))
    D_zero = fro(sys.D) <= settings.feas_tol
    return make_certificate(sys, CertificateKind.SIGNED_TIME_REVERSIBLE, R), bool(D_zero), bool(compat)


def io_energy_integral(
    sys: StateSpaceSystem,
    past_times: np.ndarray,
    past_input: np.ndarray,
) -> Tuple[np.ndarray, float]:
    """
    Drive the system from rest over the past grid, release it at t = 0
    and integrate u(-t)ᵀσy(t) over [0, T] by the trapezoid rule.

    Args:
        sys: System to excite
        past_times: Uniform grid -T, ..., 0
        past_input: Input samples on the past grid, shape (N, m)

    Returns:
        (reached state x(0), value of the integral)
    """
    past = lti.simulate(sys, past_times, past_input)
    x0 = past.final_state
    future_times = past_times - past_times[0]
    future = lti.simulate(sys, future_times, np.zeros_like(past.inputs), x0)
    reversed_input = past.inputs[::-1]
    integrand = np.einsum("ki,i,ki->k", reversed_input, sys.sigma, future.outputs)
    return x0, float(trapezoid(integrand, future_times))


def estimate_G_from_io(sys: StateSpaceSystem, T: float = 15.0, h: float = 1e-3) -> np.ndarray:
    """
    Recover G from input-output energy experiments.

    For every target x_f in {e_i} ∪ {e_i + e_j} the minimum-energy input
    u(s) = Bᵀe^{-Aᵀs}W_T⁻¹x_f on [-T, 0] steers the system from rest to
    x_f; the released output then satisfies
    x(0)ᵀGx(0) = ∫₀ᵀ u(-t)ᵀσy(t) dt, and G is fitted to the
    reached states by least squares.

    Raises:
        NotHurwitz: If A is not Hurwitz
        NotControllable: If (A, B) is not controllable
    """
    require_hurwitz(sys.A)
    if not lti.minimality(sys).controllable:
        raise NotControllable(f"{sys.name} is not controllable")
    n = sys.n
    if n == 0:
        return np.zeros((0, 0))

    gramian = solve_lyapunov(sys.A, sys.B @ sys.B.T)
    e_AT = matrix_exponential(sys.A, T)
    W_T = gramian - e_AT @ gramian @ e_AT.T

    pairs = [(i, i) for i in range(n)] + [(i, j) for i in range(n) for j in range(i + 1, n)]
    targets = np.zeros((n, len(pairs)))
    for k, (i, j) in enumerate(pairs):
        targets[i, k] = 1.0
        targets[j, k] = 1.0

    past_times = lti.step_grid(T, h, start=-T)
    N = past_times.size
    step = matrix_exponential(sys.A.T, h)
    V = np.zeros((N, n, len(pairs)))
    V[-1] = np.linalg.solve(W_T, targets)
    for k in range(N - 2, -1, -1):
        V[k] = step @ V[k + 1]
    inputs = np.einsum("im,kil->klm", sys.B, V)

    rows, values = [], []
    for k in range(len(pairs)):
        x0, energy = io_energy_integral(sys, past_times, inputs[:, k, :])
        row = [x0[i] * x0[j] * (1.0 if i == j else 2.0) for i, j in pairs]
        rows.append(row)
        values.append(energy)

    coeffs, *_ = np.linalg.lstsq(np.array(rows), np.array(values), rcond=None)
    G_hat = np.zeros((n, n))
    for c, (i, j) in zip(coeffs, pairs):
        G_hat[i, j] = G_hat[j, i] = c
    logger.info(f"{sys.name}: estimated G from {len(pairs)} input-output experiments (T={T}, h={h})")
    return G_hat


def certify_all(sys: StateSpaceSystem) -> VerdictReport:
    """Run every certificate search plus the passivity and relaxation tests."""
    from app.services import passivity

    report = VerdictReport()
    searches: Dict[CertificateKind, Callable[[StateSpaceSystem], Certificate]] = {
        CertificateKind.RECIPROCAL: find_reciprocal_G,
        CertificateKind.IO_HAMILTONIAN: find_io_hamiltonian_Omega,
        CertificateKind.SIGNED_TIME_REVERSIBLE: find_signed_time_reversal,
        CertificateKind.TIME_REVERSIBLE: find_time_reversal,
        CertificateKind.CYCLO_LOSSLESS: find_cyclo_lossless_Q,
    }
    for kind, search in searches.items():
        try:
            report.certificates.append(search(sys))
            report.flags[kind.value] = True
        except PRECONDITION_ERRORS as exc:
            report.flags[kind.value] = None
            report.notes.append(f"{kind.value}: {exc.code}: {exc.message}")
        except LtiSymError as exc:
            report.flags[kind.value] = False
            report.notes.append(f"{kind.value}: {exc.code}: {exc.message}")

    try:
        storage = passivity.kyp_storage(sys, "min")
        report.flags["passive"] = bool(storage.min_slack_eigenvalue >= -settings.feas_tol)
    except PRECONDITION_ERRORS as exc:
        report.flags["passive"] = None
        report.notes.append(f"passive: {exc.code}: {exc.message}")
    except LtiSymError as exc:
        report.flags["passive"] = False
        report.notes.append(f"passive: {exc.code}: {exc.message}")

    try:
        verdict = passivity.relaxation_test(sys)
        report.flags["relaxation"] = verdict.is_relaxation
        if verdict.reason:
            report.notes.append(f"relaxation: {verdict.reason}")
    except PRECONDITION_ERRORS as exc:
        report.flags["relaxation"] = None
        report.notes.append(f"relaxation: {exc.code}: {exc.message}")
    except LtiSymError as exc:
        report.flags["relaxation"] = False
        report.notes.append(f"relaxation: {exc.code}: {exc.message}")
    return report


def signature_time_identity(
    sys: StateSpaceSystem,
    Omega: Certificate,
    horizon: float = 1.0,
    h: float = 1e-3,
    seed: Optional[int] = None,
) -> float:
    """
    Check x₂ᵀΩx₁ |₀ᵀ = ∫ (u₂ᵀσy₁ - y₂ᵀσu₁) dt on a pair of simulated
    trajectories driven by smooth seeded inputs from seeded initial states.

    Returns:
        Relative defect of the identity
    """
    Om = np.asarray(Omega.matrix, dtype=float)
    rng = np.random.default_rng(settings.default_seed if seed is None else seed)
    scale = float(np.linalg.norm(sys.A, 2)) if sys.n else 0.0
    if scale > 0:
        h = min(h, 0.05 / scale)
    times = lti.step_grid(horizon, h)
    runs = []
    for _ in range(2):
        freqs = rng.uniform(0.5, 3.0, size=sys.m)
        phases = rng.uniform(0.0, 2 * np.pi, size=sys.m)
        inputs = np.sin(np.outer(times, freqs) + phases)
        runs.append(lti.simulate(sys, times, inputs, rng.standard_normal(sys.n)))
    first, second = runs

    pairing = np.einsum("ki,ij,kj->k", second.states, Om, first.states)
    lhs = pairing[-1] - pairing[0]
    integrand = (
        np.einsum("ki,i,ki->k", second.inputs, sys.sigma, first.outputs)
        - np.einsum("ki,i,ki->k", second.outputs, sys.sigma, first.inputs)
    )
    rhs = float(trapezoid(integrand, times))
    defect = abs(lhs - rhs) / (1.0 + abs(lhs) + abs(rhs))
    logger.debug(f"{sys.name}: signature identity defect {defect:.3e} over {times.size} samples")
    return float(defect)
