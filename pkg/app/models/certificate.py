"""Structure certificates and aggregated verdicts."""
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional

import numpy as np


class CertificateKind(str, Enum):
    """Symmetry property certified by a structure matrix."""
    RECIPROCAL = "reciprocal"                      # G
    IO_HAMILTONIAN = "iohamiltonian"               # Ω
    SIGNED_TIME_REVERSIBLE = "signed-reversible"   # R, RB = B
    TIME_REVERSIBLE = "reversible"                 # R, RB = -B
    CYCLO_LOSSLESS = "lossless"                    # Q

    @property
    def symbol(self) -> str:
        return {
            CertificateKind.RECIPROCAL: "G",
            CertificateKind.IO_HAMILTONIAN: "Omega",
            CertificateKind.SIGNED_TIME_REVERSIBLE: "R",
            CertificateKind.TIME_REVERSIBLE: "R",
            CertificateKind.CYCLO_LOSSLESS: "Q",
        }[self]

    @property
    def symmetric(self) -> bool:
        return self in (CertificateKind.RECIPROCAL, CertificateKind.CYCLO_LOSSLESS)


class Definiteness(str, Enum):
    POSDEF = "posdef"
    NEGDEF = "negdef"
    INDEFINITE = "indefinite"
    SINGULAR = "singular"


@dataclass(frozen=True, eq=False)
class Certificate:
    """A structure matrix together with the residuals that prove it."""
    kind: CertificateKind
    matrix: np.ndarray
    algebraic_residual: float
    frequency_residual: float
    definiteness: Optional[Definiteness] = None

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def to_dict(self) -> Dict[str, object]:
        return {
            "kind": self.kind.value,
            "symbol": self.kind.symbol,
            "matrix": self.matrix.tolist(),
            "algebraic_residual": float(self.algebraic_residual),
            "frequency_residual": float(self.frequency_residual),
            "definiteness": self.definiteness.value if self.definiteness else None,
        }


@dataclass
class VerdictReport:
    """
    Property flags for one system.

    A flag is True when a certificate with residuals below tolerance was
    found, False when the property was disproved and None when its
    preconditions were not met.
    """
    flags: Dict[str, Optional[bool]] = field(default_factory=dict)
    certificates: List[Certificate] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    def certificate(self, kind: CertificateKind) -> Optional[Certificate]:
        for cert in self.certificates:
            if cert.kind == kind:
                return cert
        return None
