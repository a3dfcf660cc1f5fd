"""
Seeded random systems with known structure certificates.

Every recipe builds the system from its defining equations, so the
embedded certificates are exact up to rounding.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, Optional

import numpy as np
from loguru import logger
from scipy.stats import ortho_group

from app.exceptions import DimensionError, OddDimension
from app.models.subspace import PairingForms
from app.models.system import StateSpaceSystem
from app.services import lti


class GeneratorKind(str, Enum):
    RECIPROCAL = "reciprocal"
    IO_HAMILTONIAN = "iohamiltonian"
    RELAXATION = "relaxation"
    LOSSLESS = "lossless"
    TIME_REVERSIBLE = "time-reversible"


@dataclass(frozen=True, eq=False)
class GeneratedSystem:
    system: StateSpaceSystem
    certificates: Dict[str, np.ndarray] = field(default_factory=dict)
    kind: GeneratorKind = GeneratorKind.RECIPROCAL
    seed: int = 0


def _well_conditioned(rng: np.random.Generator, n: int, low: float = 0.5, high: float = 2.0) -> np.ndarray:
    """U diag(s) V with orthogonal U, V and singular values in [low, high]."""
    if n == 1:
        return np.array([[rng.uniform(low, high) * rng.choice([-1.0, 1.0])]])
    U = ortho_group.rvs(n, random_state=rng)
    V = ortho_group.rvs(n, random_state=rng)
    return U @ np.diag(rng.uniform(low, high, size=n)) @ V


def _spd(rng: np.random.Generator, n: int, low: float = 0.5, high: float = 2.0) -> np.ndarray:
    if n == 1:
        return np.array([[rng.uniform(low, high)]])
    U = ortho_group.rvs(n, random_state=rng)
    return U @ np.diag(rng.uniform(low, high, size=n)) @ U.T


def _symmetric(rng: np.random.Generator, n: int) -> np.ndarray:
    M = rng.standard_normal((n, n))
    return 0.5 * (M + M.T)


def _skew(rng: np.random.Generator, n: int) -> np.ndarray:
    M = rng.standard_normal((n, n))
    return 0.5 * (M - M.T)


def _signature(rng: np.random.Generator, m: int) -> np.ndarray:
    sigma = rng.choice([-1.0, 1.0], size=m)
    sigma[0] = 1.0
    return sigma


def _distinct_stable_eigenvalues(rng: np.random.Generator, n: int) -> np.ndarray:
    return -np.sort(rng.uniform(0.3, 3.0, size=n)) - 0.1 * np.arange(n)


def reciprocal(n: int, m: int, rng: np.random.Generator) -> GeneratedSystem:
    """
    A = TΛT⁻¹ with stable diagonal Λ and G = T⁻ᵀST⁻¹ with random signs S,
    so GA = T⁻ᵀSΛT⁻¹ is symmetric; B = G⁻¹Cᵀσ and σD symmetric.
    """
    T = _well_conditioned(rng, n)
    T_inv = np.linalg.inv(T)
    lam = _distinct_stable_eigenvalues(rng, n)
    signs = rng.choice([-1.0, 1.0], size=n)
    A = T @ np.diag(lam) @ T_inv
    G = T_inv.T @ np.diag(signs * rng.uniform(0.5, 2.0, size=n)) @ T_inv
    G = 0.5 * (G + G.T)
    sigma = _signature(rng, m)
    C = rng.standard_normal((m, n))
    B = np.linalg.solve(G, C.T @ np.diag(sigma))
    D = np.diag(sigma) @ _symmetric(rng, m)
    return GeneratedSystem(StateSpaceSystem(A, B, C, D, sigma), {"G": G}, GeneratorKind.RECIPROCAL)


def relaxation(n: int, m: int, rng: np.random.Generator) -> GeneratedSystem:
    """G, P ≻ 0, A = -G⁻¹P, B = G⁻¹Cᵀ, D ⪰ 0, σ = I."""
    G = _spd(rng, n)
    P = _spd(rng, n)
    C = rng.standard_normal((m, n))
    A = -np.linalg.solve(G, P)
    B = np.linalg.solve(G, C.T)
    R = 0.5 * rng.standard_normal((m, m))
    D = R @ R.T
    return GeneratedSystem(StateSpaceSystem(A, B, C, D), {"G": G, "P": P}, GeneratorKind.RELAXATION)


def iohamiltonian(n: int, m: int, rng: np.random.Generator) -> GeneratedSystem:
    """
    Ω = T₀ᵀJT₀, A = Ω⁻¹Q₀ with Q₀ symmetric, B = -Ω⁻¹Cᵀσ, D = 0.

    Raises:
        OddDimension: If n is odd
    """
    if n % 2:
        raise OddDimension(f"IO Hamiltonian systems need an even state dimension, got n={n}", n=n)
    T0 = _well_conditioned(rng, n)
    Omega = T0.T @ PairingForms.symplectic(n // 2) @ T0
    Omega = 0.5 * (Omega - Omega.T)
    Q0 = _symmetric(rng, n)
    sigma = _signature(rng, m)
    C = rng.standard_normal((m, n))
    A = np.linalg.solve(Omega, Q0)
    B = -np.linalg.solve(Omega, C.T @ np.diag(sigma))
    return GeneratedSystem(StateSpaceSystem(A, B, C, None, sigma), {"Omega": Omega}, GeneratorKind.IO_HAMILTONIAN)


def lossless(n: int, m: int, rng: np.random.Generator) -> GeneratedSystem:
    """Q ≻ 0, A = Q⁻¹K with K skew, B = Q⁻¹Cᵀ, D skew: AᵀQ + QA = 0 and BᵀQ = C exactly."""
    Q = _spd(rng, n)
    K = _skew(rng, n)
    C = rng.standard_normal((m, n))
    A = np.linalg.solve(Q, K)
    B = np.linalg.solve(Q, C.T)
    D = _skew(rng, m)
    return GeneratedSystem(StateSpaceSystem(A, B, C, D), {"Q": Q}, GeneratorKind.LOSSLESS)


def conjugate(generated: GeneratedSystem, T: np.ndarray) -> GeneratedSystem:
    """
    Change coordinates x = Tξ; quadratic-form certificates map to TᵀMT and
    reversal maps to T⁻¹RT.
    """
    system = lti.similarity_transform(generated.system, T)
    certificates = {}
    for key, M in generated.certificates.items():
        if key == "R":
            certificates[key] = np.linalg.solve(T, M @ T)
        elif key in ("G", "Q", "Omega", "W"):
            certificates[key] = T.T @ M @ T
        else:
            certificates[key] = M
    return GeneratedSystem(system, certificates, generated.kind, generated.seed)


def time_reversible(n: int, m: int, rng: np.random.Generator) -> GeneratedSystem:
    """
    Canonical blocks [[0, P], [-Q, 0]], B = [0; B̃], C = [σB̃ᵀ, 0] with
    Ω = J, R = diag(I, -I), G = [[0, I], [I, 0]], then conjugated by a
    random well-conditioned T.

    Raises:
        OddDimension: If n is odd
    """
    if n % 2:
        raise OddDimension(f"time-reversible normal forms need an even state dimension, got n={n}", n=n)
    k = n // 2
    P = _spd(rng, k)
    Q = _spd(rng, k)
    B_tilde = rng.standard_normal((k, m))
    sigma = _signature(rng, m)
    Z = np.zeros((k, k))
    A = np.block([[Z, P], [-Q, Z]])
    B = np.vstack([np.zeros((k, m)), B_tilde])
    C = np.hstack([np.diag(sigma) @ B_tilde.T, np.zeros((m, k))])
    canonical = GeneratedSystem(
        StateSpaceSystem(A, B, C, None, sigma),
        {
            "Omega": PairingForms.symplectic(k),
            "R": np.diag(np.concatenate([np.ones(k), -np.ones(k)])),
            "G": PairingForms.plus(k),
        },
        GeneratorKind.TIME_REVERSIBLE,
    )
    return conjugate(canonical, _well_conditioned(rng, n))


RECIPES: Dict[GeneratorKind, Callable[[int, int, np.random.Generator], GeneratedSystem]] = {
    GeneratorKind.RECIPROCAL: reciprocal,
    GeneratorKind.IO_HAMILTONIAN: iohamiltonian,
    GeneratorKind.RELAXATION: relaxation,
    GeneratorKind.LOSSLESS: lossless,
    GeneratorKind.TIME_REVERSIBLE: time_reversible,
}


def generate(kind: GeneratorKind, n: int, m: int = 1, seed: Optional[int] = None) -> GeneratedSystem:
    """
    Build a random system of the given kind.

    Args:
        kind: Structure to embed
        n: State dimension (≥ 1; even for iohamiltonian and time-reversible)
        m: Number of inputs and outputs (≥ 1)
        seed: Seed of numpy's default generator

    Raises:
        DimensionError: If n or m is below 1
        OddDimension: If the kind needs an even n
    """
    kind = GeneratorKind(kind)
    if n < 1 or m < 1:
        raise DimensionError(f"n and m must be at least 1, got n={n}, m={m}")
    seed = 0 if seed is None else int(seed)
    rng = np.random.default_rng(seed)
    generated = RECIPES[kind](n, m, rng)
    name = f"{kind.value}-n{n}-m{m}-seed{seed}"
    logger.debug(f"generated {name}")
    return GeneratedSystem(generated.system.replace(name=name), generated.certificates, kind, seed)
