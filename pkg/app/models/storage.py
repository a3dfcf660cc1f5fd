"""Storage (dissipation) certificates."""
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np


class StorageKind(str, Enum):
    MIN_STORAGE = "min_storage"
    MAX_STORAGE = "max_storage"
    COMPATIBLE = "compatible"
    GENERIC = "generic"


@dataclass(frozen=True, eq=False)
class StorageCertificate:
    """
    Symmetric storage matrix with the spectrum of its dissipation slack

        [[-QA - AᵀQ, Cᵀ - QB], [C - BᵀQ, D + Dᵀ]].
    """
    Q: np.ndarray
    dissipation_residual_spectrum: np.ndarray
    lossless: bool
    kind: StorageKind = StorageKind.GENERIC
    iterations: int = 0

    @property
    def min_slack_eigenvalue(self) -> float:
        spectrum = self.dissipation_residual_spectrum
        return float(spectrum.min()) if spectrum.size else 0.0


@dataclass(frozen=True, eq=False)
class RelaxationVerdict:
    is_relaxation: bool
    G: Optional[np.ndarray]
    GA_psd: bool
    dissipation_slack_min: Optional[float] = None
    reason: str = ""


@dataclass(frozen=True, eq=False)
class KernelInvarianceReport:
    kernel_basis: np.ndarray
    a_invariant: bool
    in_ker_C: bool
    observable: bool

    @property
    def kernel_dim(self) -> int:
        return int(self.kernel_basis.shape[1])

    @property
    def passed(self) -> bool:
        return self.a_invariant and self.in_ker_C and (not self.observable or self.kernel_dim == 0)
