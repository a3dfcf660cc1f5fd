"""Matrix carriers used by the structured solver."""
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from app.exceptions import DimensionError


def as_matrix(value, rows: Optional[int] = None, cols: Optional[int] = None, name: str = "matrix") -> np.ndarray:
    """
    Convert ``value`` to a finite 2-D float array.

    Empty inputs are reshaped to ``(rows, cols)`` when one of them is zero.

    Raises:
        DimensionError: On shape mismatch or non-finite entries
    """
    arr = np.array(value, dtype=float)
    if arr.size == 0 and rows is not None and cols is not None and rows * cols == 0:
        return np.zeros((rows, cols))
    if arr.ndim == 1 and rows is not None and cols is not None and arr.size == rows * cols:
        arr = arr.reshape(rows, cols)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be two-dimensional, got shape {arr.shape}")
    if rows is not None and arr.shape[0] != rows:
        raise DimensionError(f"{name} has {arr.shape[0]} rows, expected {rows}")
    if cols is not None and arr.shape[1] != cols:
        raise DimensionError(f"{name} has {arr.shape[1]} columns, expected {cols}")
    if not np.all(np.isfinite(arr)):
        raise DimensionError(f"{name} has non-finite entries")
    return arr


class Symmetry(str, Enum):
    """Structure imposed on the unknown of a LinearConstraintSystem."""
    NONE = "none"
    SYMMETRIC = "symmetric"
    SKEW = "skew"


class SolutionStatus(str, Enum):
    UNIQUE = "unique"
    FAMILY = "family"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True, eq=False)
class LinearConstraintSystem:
    """
    Vectorized linear equations over the entries of an unknown matrix.

    Row k reads ``coefficients[k] @ vec(X) = rhs[k]`` with ``vec`` in
    row-major order.
    """
    shape: Tuple[int, int]
    coefficients: np.ndarray
    rhs: np.ndarray
    symmetry: Symmetry = Symmetry.NONE

    def __post_init__(self):
        rows, cols = self.shape
        coefficients = np.asarray(self.coefficients, dtype=float).reshape(-1, rows * cols)
        rhs = np.asarray(self.rhs, dtype=float).reshape(-1)
        if coefficients.shape[0] != rhs.shape[0]:
            raise DimensionError(
                f"{coefficients.shape[0]} coefficient rows but {rhs.shape[0]} right-hand sides"
            )
        if self.symmetry != Symmetry.NONE and rows != cols:
            raise DimensionError(f"{self.symmetry.value} unknown must be square, got {self.shape}")
        object.__setattr__(self, "coefficients", coefficients)
        object.__setattr__(self, "rhs", rhs)

    @property
    def equation_count(self) -> int:
        return self.rhs.shape[0]


@dataclass(frozen=True, eq=False)
class StructuredSolution:
    """Affine solution set ``particular + span(null_basis)`` of a constraint system."""
    status: SolutionStatus
    particular: np.ndarray
    null_basis: np.ndarray  # (family_dim, rows, cols)
    residual: float

    @property
    def family_dim(self) -> int:
        return int(self.null_basis.shape[0])

    @property
    def feasible(self) -> bool:
        return self.status != SolutionStatus.INFEASIBLE

    @property
    def unique(self) -> bool:
        return self.status == SolutionStatus.UNIQUE
