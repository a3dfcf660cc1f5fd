"""Subspaces of F×E and discretized operators."""
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import orth

from app.exceptions import DimensionError


class PairingForm(str, Enum):
    SYMPLECTIC = "symplectic"
    PLUS = "plus"


class PairingForms:
    """Matrices of the canonical pairings on F×E, dim F = n."""

    @staticmethod
    def symplectic(n: int) -> np.ndarray:
        I, Z = np.eye(n), np.zeros((n, n))
        return np.block([[Z, -I], [I, Z]])

    @staticmethod
    def plus(n: int) -> np.ndarray:
        I, Z = np.eye(n), np.zeros((n, n))
        return np.block([[Z, I], [I, Z]])

    @classmethod
    def matrix(cls, form: PairingForm, n: int) -> np.ndarray:
        if PairingForm(form) == PairingForm.SYMPLECTIC:
            return cls.symplectic(n)
        return cls.plus(n)


@dataclass(frozen=True, eq=False)
class LinearSubspace:
    """Subspace of ℝ²ⁿ = F×E stored by an orthonormal basis (columns)."""
    basis: np.ndarray

    def __post_init__(self):
        basis = np.asarray(self.basis, dtype=float)
        if basis.ndim != 2 or basis.shape[0] % 2:
            raise DimensionError(f"subspace basis must have an even number of rows, got {basis.shape}")
        object.__setattr__(self, "basis", basis)

    @classmethod
    def from_spanning(cls, vectors: np.ndarray, rcond: Optional[float] = None) -> "LinearSubspace":
        vectors = np.asarray(vectors, dtype=float)
        if vectors.ndim == 1:
            vectors = vectors.reshape(-1, 1)
        if vectors.shape[1] == 0 or not np.any(vectors):
            return cls(np.zeros((vectors.shape[0], 0)))
        return cls(orth(vectors, rcond=rcond))

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def n(self) -> int:
        return self.basis.shape[0] // 2

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def f_part(self) -> np.ndarray:
        return self.basis[: self.n]

    @property
    def e_part(self) -> np.ndarray:
        return self.basis[self.n:]


@dataclass(frozen=True, eq=False)
class HybridRepresentation:
    """
    (e¹, f²) = S_h (f¹, e²) with index split I1/I2 and signature
    Σ = diag(I, -I) satisfying ΣS_h = S_hᵀΣ.
    """
    I1: Tuple[int, ...]
    I2: Tuple[int, ...]
    S_h: np.ndarray
    signature: np.ndarray
    residual: float

    def generating_function(self, u: np.ndarray) -> float:
        """½ uᵀΣS_h u for u = (f¹, e²)."""
        u = np.asarray(u, dtype=float)
        return 0.5 * float(u @ self.signature @ self.S_h @ u)


@dataclass(frozen=True, eq=False)
class KernelRepresentation:
    """D = ker [F E] with FEᵀ + EFᵀ = 0."""
    F: np.ndarray
    E: np.ndarray
    residual: float


@dataclass(frozen=True, eq=False)
class SeparableResult:
    separable: bool
    K: Optional[np.ndarray]
    cross_pairing: float


@dataclass(frozen=True, eq=False)
class DiscretizedOperator:
    """
    Grid realization of an integral operator acting on piecewise-constant
    inputs: ``kernel`` holds m×m blocks per cell pair, ``constraint`` the
    discretized moment constraints (may be empty).
    """
    times: np.ndarray
    kernel: np.ndarray
    constraint: np.ndarray
    weights: np.ndarray

    @property
    def cells(self) -> int:
        return len(self.weights)


@dataclass(frozen=True, eq=False)
class HankelCheckReport:
    symmetric: bool
    asymmetry: float
    form_residual: float
    norm: float
    operator: DiscretizedOperator


@dataclass(frozen=True, eq=False)
class VolterraReport:
    symmetric: bool
    asymmetry: float
    definiteness: str  # "psd" or "indefinite"
    min_eigenvalue: float
    max_eigenvalue: float
    constrained_dim: int
    operator: DiscretizedOperator
    nonpositive: bool = False
    negative_witness: Optional[np.ndarray] = None
    positive_witness: Optional[np.ndarray] = None
