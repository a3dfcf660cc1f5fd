"""Hankel operator spectral data."""
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np


@dataclass(frozen=True, eq=False)
class HankelSpectralData:
    """
    Gramians, cross-Gramian and eigenpairs of 𝒞G.

    Eigenvectors x_i are the columns of ``eigvecs`` scaled so that
    x_iᵀ𝒞⁻¹x_i = 1; eigenvalues are sorted by decreasing value.
    """
    ctrb_gramian: np.ndarray
    obsv_gramian: np.ndarray
    cross_gramian: np.ndarray
    eigenvalues: np.ndarray
    eigvecs: np.ndarray
    G: Optional[np.ndarray] = None
    ctrb_sqrt: Optional[np.ndarray] = None
    identity_residuals: Dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class MemoryFunctionalSample:
    """Both evaluations of the memory functional for one past input."""
    times: np.ndarray          # past grid on [-T, 0]
    past_input: np.ndarray     # (N, m)
    value: float               # quadrature of the double integral
    state_value: float         # ½ x(0)ᵀ G x(0)
    reached_state: np.ndarray

    @property
    def discrepancy(self) -> float:
        return abs(self.value - self.state_value)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid 0, h, ..., T."""
    horizon: float
    step: float

    @property
    def points(self) -> int:
        return int(round(self.horizon / self.step)) + 1

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.step * (self.points - 1), self.points)
