"""Canonical forms produced by app.services.forms."""
from dataclasses import dataclass
from typing import Dict

import numpy as np
from scipy.linalg import block_diag

from app.models.system import StateSpaceSystem


@dataclass(frozen=True, eq=False)
class PseudoGradientForm:
    """Gẋ = -Px + Cᵀσu, y = Cx + Du with P = -GA symmetric."""
    G: np.ndarray
    P: np.ndarray
    C: np.ndarray
    D: np.ndarray
    sigma: np.ndarray

    def reconstruct(self) -> StateSpaceSystem:
        """Recover (A, B, C, D) as A = -G⁻¹P, B = G⁻¹Cᵀσ."""
        A = -np.linalg.solve(self.G, self.P)
        B = np.linalg.solve(self.G, self.C.T @ np.diag(self.sigma))
        return StateSpaceSystem(A, B, self.C, self.D, self.sigma)


@dataclass(frozen=True, eq=False)
class CompatibleCoordinates:
    """x = T x̃ with TᵀQT = diag(Q1, Q2) and TᵀGT = diag(Q1, -Q2)."""
    T: np.ndarray
    Q1: np.ndarray
    Q2: np.ndarray

    @property
    def sizes(self):
        return self.Q1.shape[0], self.Q2.shape[0]


@dataclass(frozen=True, eq=False)
class PortHamiltonianForm:
    """
    ż = (J - R)∇H(z) + g u, y = gᵀ∇H(z) + Du with z = T x and
    H(z) = ½ z₁ᵀQ₁⁻¹z₁ + ½ z₂ᵀQ₂⁻¹z₂.
    """
    T: np.ndarray
    J: np.ndarray
    R: np.ndarray
    Q1: np.ndarray
    Q2: np.ndarray
    P1: np.ndarray
    P2: np.ndarray
    Pc: np.ndarray
    g: np.ndarray
    D: np.ndarray

    @property
    def hessian(self) -> np.ndarray:
        return block_diag(*(np.linalg.inv(Q) for Q in (self.Q1, self.Q2) if Q.size))

    def hamiltonian(self, z: np.ndarray) -> float:
        z = np.asarray(z, dtype=float)
        return 0.5 * float(z @ self.hessian @ z)

    def as_state_space(self) -> StateSpaceSystem:
        H = self.hessian
        return StateSpaceSystem((self.J - self.R) @ H, self.g, self.g.T @ H, self.D)

    def blocks(self) -> Dict[str, np.ndarray]:
        return {
            "T": self.T, "J": self.J, "R": self.R, "Q1": self.Q1, "Q2": self.Q2,
            "P1": self.P1, "P2": self.P2, "Pc": self.Pc, "g": self.g, "D": self.D,
        }


@dataclass(frozen=True, eq=False)
class DerivativeOutputForm:
    """
    ẋ = JQx - JCᵀu, z = CJQx - CJCᵀu with J = Ω⁻¹, Q = ΩA; z is the
    time-derivative of the original output.
    """
    J: np.ndarray
    Q: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    energy_skew_residual: float
    feedthrough_skew_residual: float

    def as_state_space(self) -> StateSpaceSystem:
        return StateSpaceSystem(self.A, self.B, self.C, self.D)

    def energy(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        return 0.5 * float(x @ self.Q @ x)


@dataclass(frozen=True, eq=False)
class NormalForm:
    """
    Coordinates x = T x̃ in which Ω is canonical, with the transformed
    system and its named blocks.
    """
    T: np.ndarray
    Omega: np.ndarray
    system: StateSpaceSystem
    blocks: Dict[str, np.ndarray]
    structure_residual: float


@dataclass(frozen=True, eq=False)
class FactorizationForm:
    """
    K(s) = M(s)Mᵀ(-s) with M(s) = H(sI - (F - PX))⁻¹P_factor for the
    Hamiltonian block system A = [[F, -P], [-S, -Fᵀ]], B = [0; Hᵀ], C = [H, 0].
    """
    F: np.ndarray
    P: np.ndarray
    S: np.ndarray
    H: np.ndarray
    X: np.ndarray
    P_factor: np.ndarray
    riccati_residual: float
    factorization_residual: float

    @property
    def M_realization(self):
        """(A_M, B_M, C_M) of the stable spectral factor; M is m×k."""
        return self.F - self.P @ self.X, self.P_factor, self.H

    def M(self, s: complex) -> np.ndarray:
        A_M, B_M, C_M = self.M_realization
        k = A_M.shape[0]
        return C_M @ np.linalg.solve(s * np.eye(k) - A_M, B_M)

    def hamiltonian_system(self) -> StateSpaceSystem:
        k = self.F.shape[0]
        m = self.H.shape[0]
        A = np.block([[self.F, -self.P], [-self.S, -self.F.T]])
        B = np.vstack([np.zeros((k, m)), self.H.T])
        C = np.hstack([self.H, np.zeros((m, k))])
        return StateSpaceSystem(A, B, C)
