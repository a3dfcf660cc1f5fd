"""
Hankel operator of a stable system: Gramians, the cross-Gramian, the
spectrum and eigenfunctions of the signature-weighted Hankel operator σℋ,
its Mercer expansion and the memory functional.
"""
from typing import Optional, Tuple

import numpy as np
import scipy.linalg as la
from loguru import logger
from scipy.integrate import trapezoid

from app.exceptions import NotReciprocal, SingularGramian
from app.models.certificate import Certificate, CertificateKind
from app.models.spectral import HankelSpectralData, MemoryFunctionalSample
from app.models.system import StateSpaceSystem
from app.services import certify, lti
from app.services.matcore import (
    fro,
    is_invertible,
    matrix_exponential,
    psd_sqrt,
    require_hurwitz,
    solve_lyapunov,
    solve_sylvester,
)
from config.settings import settings

MERCER_BLOCK = 256


def compute_gramians(sys: StateSpaceSystem) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Controllability, observability and cross Gramians:

        A𝒞 + 𝒞Aᵀ + BBᵀ = 0,  Aᵀ𝒪 + 𝒪A + CᵀC = 0,  AZ + ZA + BσC = 0.

    Raises:
        NotHurwitz: If A is not Hurwitz
    """
    require_hurwitz(sys.A)
    ctrb = solve_lyapunov(sys.A, sys.B @ sys.B.T)
    obsv = solve_lyapunov(sys.A.T, sys.C.T @ sys.C)
    cross = solve_sylvester(sys.A, sys.A, -sys.B @ sys.Sigma @ sys.C) if sys.n else np.zeros((0, 0))
    return ctrb, obsv, cross


def _certificate_matrix(sys: StateSpaceSystem, G) -> np.ndarray:
    Gm = np.asarray(G.matrix if isinstance(G, Certificate) else G, dtype=float)
    if not certify.check_certificate(sys, CertificateKind.RECIPROCAL, Gm):
        raise NotReciprocal(f"G does not certify reciprocity of {sys.name}")
    return Gm


def hankel_spectrum(sys: StateSpaceSystem, G) -> HankelSpectralData:
    """
    Eigenpairs of 𝒞G, the nonzero spectrum of σℋ.

    The eigenvalues are taken from the symmetric matrix 𝒞^{½}G𝒞^{½},
    which is similar to 𝒞G; eigenvectors xᵢ = 𝒞^{½}yᵢ then satisfy
    xᵢᵀ𝒞⁻¹xⱼ = δᵢⱼ whenever 𝒞 is invertible.

    Raises:
        NotReciprocal: If G is not a reciprocity certificate of sys
        NotHurwitz: If A is not Hurwitz
    """
    Gm = _certificate_matrix(sys, G)
    ctrb, obsv, cross = compute_gramians(sys)
    root = psd_sqrt(ctrb)
    core = root @ Gm @ root
    lam, Y = np.linalg.eigh(0.5 * (core + core.T))
    order = np.argsort(lam)[::-1]
    lam, Y = lam[order], Y[:, order]
    X = root @ Y

    scale = max(1.0, fro(cross))
    residuals = {
        "Z - CG": fro(cross - ctrb @ Gm) / scale,
        "Z - G^-1 O": fro(cross - np.linalg.solve(Gm, obsv)) / scale if sys.n else 0.0,
        "Z^2 - CO": fro(cross @ cross - ctrb @ obsv) / scale ** 2,
        "O - GCG": fro(obsv - Gm @ ctrb @ Gm) / max(1.0, fro(obsv)),
    }
    logger.debug(f"{sys.name}: Hankel spectrum {np.array2string(lam, precision=6)}")
    return HankelSpectralData(
        ctrb_gramian=ctrb,
        obsv_gramian=obsv,
        cross_gramian=cross,
        eigenvalues=lam,
        eigvecs=X,
        G=Gm,
        ctrb_sqrt=root,
        identity_residuals=residuals,
    )


def _ctrb_inverse_vectors(data: HankelSpectralData) -> np.ndarray:
    """Columns 𝒞⁻¹xᵢ."""
    if not is_invertible(data.ctrb_gramian):
        raise SingularGramian("controllability Gramian is singular; the system is not controllable")
    return np.linalg.solve(data.ctrb_gramian, data.eigvecs)


def eigenfunctions(sys: StateSpaceSystem, data: HankelSpectralData, times: np.ndarray) -> np.ndarray:
    """
    Samples of φᵢ(t) = Bᵀe^{Aᵀt}𝒞⁻¹xᵢ.

    Returns:
        Array of shape (len(times), m, n); ``[k, :, i]`` is φᵢ(t_k)

    Raises:
        SingularGramian: If 𝒞 is singular
    """
    V = _ctrb_inverse_vectors(data)
    times = np.asarray(times, dtype=float).reshape(-1)
    samples = np.zeros((times.size, sys.m, sys.n))
    for k, t in enumerate(times):
        samples[k] = sys.B.T @ matrix_exponential(sys.A.T, t) @ V
    return samples


def eigenfunction_gram(data: HankelSpectralData) -> np.ndarray:
    """L₂[0, ∞) inner products ⟨φᵢ, φⱼ⟩ = xᵢᵀ𝒞⁻¹xⱼ in closed form."""
    V = _ctrb_inverse_vectors(data)
    gram = data.eigvecs.T @ V
    return 0.5 * (gram + gram.T)


def mercer_residual(
    sys: StateSpaceSystem,
    data: HankelSpectralData,
    times: np.ndarray,
    terms: Optional[int] = None,
) -> float:
    """
    max over the grid of |σCe^{A(t+τ)}B - Σᵢ λᵢφᵢ(t)φᵢ(τ)ᵀ|, keeping the
    first ``terms`` eigenpairs (all when omitted).
    """
    times = np.asarray(times, dtype=float).reshape(-1)
    if sys.n == 0 or times.size == 0:
        return 0.0
    left = np.array([sys.Sigma @ sys.C @ matrix_exponential(sys.A, t) for t in times])
    right = np.array([matrix_exponential(sys.A, t) @ sys.B for t in times])

    keep = sys.n if terms is None else int(terms)
    phi = eigenfunctions(sys, data, times)[:, :, :keep]
    weighted = phi * data.eigenvalues[:keep]

    # N×N kernel in row blocks of MERCER_BLOCK.
    worst = 0.0
    for start in range(0, times.size, MERCER_BLOCK):
        rows = slice(start, start + MERCER_BLOCK)
        kernel = np.einsum("kan,lnb->klab", left[rows], right)
        expansion = np.einsum("kai,lbi->klab", weighted[rows], phi)
        worst = max(worst, float(np.max(np.abs(kernel - expansion))))
    return worst


def memory_functional(
    sys: StateSpaceSystem,
    G,
    past_times: np.ndarray,
    past_input: np.ndarray,
) -> MemoryFunctionalSample:
    """
    Evaluate 𝔥(û) = ½⟨û, σℋû⟩ for the time-reversed past input
    û(τ) = u(-τ) both by quadrature and as ½x(0)ᵀGx(0).

    The double integral factors as ½aᵀb with b = ∫e^{Aτ}Bû(τ)dτ and
    aᵀ = ∫ûᵀ(t)σCe^{At}dt; both are trapezoid sums.

    Raises:
        NotHurwitz: If A is not Hurwitz
    """
    require_hurwitz(sys.A)
    Gm = np.asarray(G.matrix if isinstance(G, Certificate) else G, dtype=float)
    past_times = np.asarray(past_times, dtype=float).reshape(-1)
    N = past_times.size
    past_input = np.asarray(past_input, dtype=float).reshape(N, sys.m)

    trajectory = lti.simulate(sys, past_times, past_input)
    x0 = trajectory.final_state
    state_value = 0.5 * float(x0 @ Gm @ x0)

    reversed_input = past_input[::-1]
    tau = past_times - past_times[0]
    h = float(tau[1] - tau[0]) if N > 1 else 0.0
    step = matrix_exponential(sys.A, h)
    powers = np.zeros((N, sys.n, sys.n))
    if N:
        powers[0] = np.eye(sys.n)
    for k in range(1, N):
        powers[k] = powers[k - 1] @ step
    b = trapezoid(np.einsum("kij,jm,km->ki", powers, sys.B, reversed_input), tau, axis=0)
    a = trapezoid(np.einsum("km,m,mj,kji->ki", reversed_input, sys.sigma, sys.C, powers), tau, axis=0)
    value = 0.5 * float(a @ b)
    logger.debug(f"{sys.name}: memory functional {value:.6e} vs state value {state_value:.6e}")
    return MemoryFunctionalSample(
        times=past_times,
        past_input=past_input,
        value=value,
        state_value=state_value,
        reached_state=x0,
    )


def hankel_norm_oracle(sys: StateSpaceSystem) -> float:
    """Classical Hankel norm √λmax(𝒞𝒪)."""
    ctrb, obsv, _ = compute_gramians(sys)
    if sys.n == 0:
        return 0.0
    lam = np.linalg.eigvals(ctrb @ obsv).real
    return float(np.sqrt(max(0.0, lam.max())))


def _hankel_factors(sys: StateSpaceSystem, horizon: float, h: float):
    """
    Low-rank factors of the discretized σℋ on piecewise-constant inputs
    over ``cells`` cells: the block (i, j) equals L_i R_j with
    L_i = σC e^{Aih}Φ/√h and R_j = Φ e^{Ajh}B/√h, Φ = ∫₀ʰ e^{As} ds.
    """
    cells = int(round(horizon / h))
    Ad, Phi, _ = lti.cell_integrals(sys.A, h)
    return cells, Ad, Phi


def discretized_hankel_eigenvalues(sys: StateSpaceSystem, horizon: float, h: float) -> np.ndarray:
    """
    Nonzero eigenvalues of the discretized σℋ on [0, horizon] with step h.

    With the factorization H = 𝓛𝓡 the nonzero spectrum equals that of the
    n×n matrix 𝓡𝓛 = Φ X Φ / h, X = Σⱼ Adʲ BσC Adʲ (j < cells), where X
    solves the Stein equation X - Ad X Ad = Y - Adᴺ Y Adᴺ, Y = BσC.

    Returns:
        Eigenvalues sorted by decreasing real part (real when sys is reciprocal)
    """
    require_hurwitz(sys.A)
    if sys.n == 0:
        return np.zeros(0)
    cells, Ad, Phi = _hankel_factors(sys, horizon, h)
    Y = sys.B @ sys.Sigma @ sys.C
    AdN = matrix_exponential(sys.A, cells * h)
    rhs = Y - AdN @ Y @ AdN
    Ad_inv = np.linalg.inv(Ad)
    X = la.solve_sylvester(Ad_inv, -Ad, Ad_inv @ rhs)
    core = Phi @ X @ Phi / h
    lam = np.linalg.eigvals(core)
    if np.max(np.abs(lam.imag), initial=0.0) <= 1e-8 * max(1.0, np.max(np.abs(lam))):
        lam = lam.real
    order = np.argsort(-np.real(lam))
    logger.debug(f"{sys.name}: discretized Hankel spectrum on {cells} cells (h={h})")
    return lam[order]


def discretized_hankel_matrix(sys: StateSpaceSystem, horizon: float, h: float) -> np.ndarray:
    """Full (cells·m)×(cells·m) matrix of the discretized σℋ."""
    cells, Ad, Phi = _hankel_factors(sys, horizon, h)
    n, m = sys.n, sys.m
    left = np.zeros((cells, m, n))
    right = np.zeros((cells, n, m))
    power = np.eye(n)
    for k in range(cells):
        left[k] = sys.Sigma @ sys.C @ power @ Phi / np.sqrt(h)
        right[k] = Phi @ power @ sys.B / np.sqrt(h)
        power = power @ Ad
    blocks = np.einsum("ian,jnb->iajb", left, right)
    return blocks.reshape(cells * m, cells * m)


def memory_functional_gradient_check(
    sys: StateSpaceSystem,
    horizon: float = 5.0,
    h: float = 0.05,
    directions: int = 5,
    seed: Optional[int] = None,
) -> float:
    """
    Compare central finite differences of ½ûᵀHû with σℋû evaluated
    through the reached state x(0) = ∫e^{Aτ}Bû(τ)dτ.

    Returns:
        Max relative discrepancy over random directions
    """
    require_hurwitz(sys.A)
    rng = np.random.default_rng(settings.default_seed if seed is None else seed)
    H = discretized_hankel_matrix(sys, horizon, h)
    cells, Ad, Phi = _hankel_factors(sys, horizon, h)
    u = rng.standard_normal(cells * sys.m)

    blocks = u.reshape(cells, sys.m)
    x0 = np.zeros(sys.n)
    power = np.eye(sys.n)
    powers = []
    for k in range(cells):
        powers.append(power)
        x0 += power @ Phi @ sys.B @ blocks[k] / np.sqrt(h)
        power = power @ Ad
    output = np.concatenate([sys.Sigma @ sys.C @ P @ Phi @ x0 / np.sqrt(h) for P in powers])

    def functional(v: np.ndarray) -> float:
        return 0.5 * float(v @ H @ v)

    eps = 1e-5 * max(1.0, np.linalg.norm(u))
    worst = 0.0
    for _ in range(directions):
        d = rng.standard_normal(u.size)
        d /= np.linalg.norm(d)
        numeric = (functional(u + eps * d) - functional(u - eps * d)) / (2 * eps)
        exact = float(d @ output)
        worst = max(worst, abs(numeric - exact) / (1.0 + abs(exact)))
    return worst
