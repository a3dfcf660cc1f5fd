"""
LTI system model operations: transfer matrix, impulse response,
minimality, companion systems and fixed-step simulation.
"""
from typing import Iterable, Optional

import numpy as np
from loguru import logger

from app.exceptions import DimensionError, GridTooCoarse, NegativeTime, SingularResolvent
from app.models.system import MinimalityReport, StateSpaceSystem, Trajectory
from app.services.matcore import fro, is_hurwitz, matrix_exponential
from config.settings import settings

# Resolvent solves above this condition number are refused.
RESOLVENT_COND_LIMIT = 1e12


def transfer(sys: StateSpaceSystem, s: complex) -> np.ndarray:
    """
    Evaluate K(s) = C(sI - A)⁻¹B + D.

    Raises:
        SingularResolvent: If s is (numerically) an eigenvalue of A
    """
    if sys.n == 0:
        return sys.D.astype(complex)
    resolvent = s * np.eye(sys.n) - sys.A
    cond = np.linalg.cond(resolvent)
    if not np.isfinite(cond) or cond > RESOLVENT_COND_LIMIT:
        raise SingularResolvent(f"s={s} is too close to an eigenvalue of A (cond {cond:.3e})", s=str(s))
    return sys.C @ np.linalg.solve(resolvent, sys.B.astype(complex)) + sys.D


def transfer_many(sys: StateSpaceSystem, samples: Iterable[complex]) -> np.ndarray:
    """Stack K(s) over ``samples``; shape (len(samples), m, m)."""
    return np.array([transfer(sys, s) for s in samples])


def impulse_response(sys: StateSpaceSystem, t: float) -> np.ndarray:
    """
    Smooth part Ce^{At}B of the impulse response; the Dδ atom is carried
    separately by ``sys.D``.

    Raises:
        NegativeTime: If t < 0
    """
    if t < 0:
        raise NegativeTime(f"impulse response requested at t={t} < 0")
    if sys.n == 0:
        return np.zeros((sys.m, sys.m))
    return sys.C @ matrix_exponential(sys.A, t) @ sys.B


def controllability_matrix(sys: StateSpaceSystem) -> np.ndarray:
    blocks = [sys.B]
    for _ in range(1, sys.n):
        blocks.append(sys.A @ blocks[-1])
    return np.hstack(blocks) if sys.n else np.zeros((0, 0))


def observability_matrix(sys: StateSpaceSystem) -> np.ndarray:
    blocks = [sys.C]
    for _ in range(1, sys.n):
        blocks.append(blocks[-1] @ sys.A)
    return np.vstack(blocks) if sys.n else np.zeros((0, 0))


def krylov_dimension(A: np.ndarray, B: np.ndarray) -> int:
    """
    dim span{B, AB, A²B, ...} by orthogonal block Krylov iteration, with
    rank threshold null_tol·max(1, ‖A‖₂, ‖B‖₂) on every new block.
    """
    n = A.shape[0]
    if n == 0 or B.size == 0:
        return 0
    tol = settings.null_tol * max(1.0, float(np.linalg.norm(A, 2)), float(np.linalg.norm(B, 2)))
    basis = np.zeros((n, 0))
    block = B
    while basis.shape[1] < n:
        for _ in range(2):
            block = block - basis @ (basis.T @ block)
        U, s, _ = np.linalg.svd(block, full_matrices=False)
        r = int(np.sum(s > tol))
        if r == 0:
            break
        new = U[:, :r]
        basis = np.hstack([basis, new])
        block = A @ new
    return basis.shape[1]


def minimality(sys: StateSpaceSystem) -> MinimalityReport:
    """Controllable and observable subspace dimensions by orthogonal Krylov iteration."""
    ctrb_rank = krylov_dimension(sys.A, sys.B)
    obsv_rank = krylov_dimension(sys.A.T, sys.C.T)
    return MinimalityReport(
        controllable=ctrb_rank == sys.n,
        observable=obsv_rank == sys.n,
        ctrb_rank=ctrb_rank,
        obsv_rank=obsv_rank,
    )


def is_minimal(sys: StateSpaceSystem) -> bool:
    return minimality(sys).minimal


def dual_system(sys: StateSpaceSystem) -> StateSpaceSystem:
    """(Aᵀ, Cᵀ, Bᵀ, Dᵀ) with the same signature."""
    return StateSpaceSystem(sys.A.T, sys.C.T, sys.B.T, sys.D.T, sys.sigma, name=f"{sys.name}:dual")


def adjoint_system(sys: StateSpaceSystem) -> StateSpaceSystem:
    """(-Aᵀ, -Cᵀ, Bᵀ, Dᵀ); its transfer matrix is K(-s)ᵀ."""
    return StateSpaceSystem(-sys.A.T, -sys.C.T, sys.B.T, sys.D.T, sys.sigma, name=f"{sys.name}:adjoint")


def similarity_transform(sys: StateSpaceSystem, T: np.ndarray) -> StateSpaceSystem:
    """Change of coordinates x = T x̃: (T⁻¹AT, T⁻¹B, CT, D)."""
    T = np.asarray(T, dtype=float)
    if T.shape != (sys.n, sys.n):
        raise DimensionError(f"transformation must be {sys.n}×{sys.n}, got {T.shape}")
    A = np.linalg.solve(T, sys.A @ T)
    B = np.linalg.solve(T, sys.B)
    return StateSpaceSystem(A, B, sys.C @ T, sys.D, sys.sigma, name=sys.name)


def _rk4_maps(A: np.ndarray, B: np.ndarray, h: float):
    """
    Linear RK4 step x⁺ = Φx + Γ₀u₀ + Γ₁u_mid + Γ₂u₁ for ẋ = Ax + Bu with
    the input linearly interpolated at the half step.
    """
    n = A.shape[0]
    I = np.eye(n)
    A2 = A @ A
    A3 = A2 @ A
    Phi = I + h * A + h ** 2 / 2 * A2 + h ** 3 / 6 * A3 + h ** 4 / 24 * A3 @ A
    # k1 = Ax + Bu0, k2 = A(x + h/2 k1) + Bum, k3 = A(x + h/2 k2) + Bum, k4 = A(x + h k3) + Bu1
    G0 = h / 6 * (I + h * A + h ** 2 / 2 * A2 + h ** 3 / 4 * A3) @ B
    Gm = h / 6 * (4 * I + 2 * h * A + h ** 2 / 2 * A2) @ B
    G1 = h / 6 * B
    return Phi, G0, Gm, G1


def simulate(
    sys: StateSpaceSystem,
    times: np.ndarray,
    inputs: np.ndarray,
    x0: Optional[np.ndarray] = None,
) -> Trajectory:
    """
    Classical fourth-order fixed-step integration of ẋ = Ax + Bu.

    Args:
        sys: System to simulate
        times: Uniform time grid
        inputs: Input samples, shape (len(times), m)
        x0: Initial state (zero when omitted)

    Returns:
        Trajectory with states, inputs and outputs on the grid

    Raises:
        GridTooCoarse: If the grid step exceeds 0.1/‖A‖
    """
    times = np.asarray(times, dtype=float).reshape(-1)
    N = times.size
    inputs = np.asarray(inputs, dtype=float).reshape(N, sys.m)
    x0 = np.zeros(sys.n) if x0 is None else np.asarray(x0, dtype=float).reshape(sys.n)

    states = np.zeros((N, sys.n))
    if N:
        states[0] = x0
    if N > 1 and sys.n:
        h = float(times[1] - times[0])
        if h <= 0 or not np.allclose(np.diff(times), h, rtol=1e-9, atol=1e-12):
            raise DimensionError("simulation grid must be uniform and increasing")
        norm_A = float(np.linalg.norm(sys.A, 2))
        if norm_A > 0 and h > 0.1 / norm_A:
            raise GridTooCoarse(f"step {h:.3e} exceeds 0.1/‖A‖ = {0.1 / norm_A:.3e}", step=h)

        Phi, G0, Gm, G1 = _rk4_maps(sys.A, sys.B, h)
        u_mid = 0.5 * (inputs[:-1] + inputs[1:])
        forcing = inputs[:-1] @ G0.T + u_mid @ Gm.T + inputs[1:] @ G1.T
        x = x0.copy()
        for k in range(N - 1):
            x = Phi @ x + forcing[k]
            states[k + 1] = x
        logger.debug(f"simulate n={sys.n} steps={N - 1} h={h:.3e}")

    outputs = states @ sys.C.T + inputs @ sys.D.T
    return Trajectory(times=times, states=states, inputs=inputs, outputs=outputs)


def step_grid(horizon: float, h: float, start: float = 0.0) -> np.ndarray:
    """Uniform grid start, start + h, ..., start + horizon."""
    points = int(round(horizon / h)) + 1
    return start + h * np.arange(points)


def default_horizon(sys: StateSpaceSystem, factor: float = 15.0, cap: float = 100.0) -> float:
    """factor/|Re λ_max(A)| for Hurwitz A, capped."""
    if sys.n == 0 or not is_hurwitz(sys.A):
        return cap
    abscissa = abs(float(np.max(np.linalg.eigvals(sys.A).real)))
    return min(cap, factor / abscissa)


def system_scale(sys: StateSpaceSystem) -> float:
    return max(1.0, fro(sys.A), fro(sys.B), fro(sys.C), fro(sys.D))


def cell_integrals(A: np.ndarray, h: float):
    """
    Exact integrals over one cell of length h, from a single block
    exponential of [[A, I, 0], [0, 0, I], [0, 0, 0]]:

        e^{Ah},  ∫₀ʰ e^{As} ds,  ∫₀ʰ (h - s) e^{As} ds.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    I, Z = np.eye(n), np.zeros((n, n))
    block = np.block([[A, I, Z], [Z, Z, I], [Z, Z, Z]])
    E = matrix_exponential(block, h)
    return E[:n, :n], E[:n, n:2 * n], E[:n, 2 * n:]
