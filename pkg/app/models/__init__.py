"""Domain types shared by the services."""
from app.models.matrix import (
    LinearConstraintSystem,
    SolutionStatus,
    StructuredSolution,
    Symmetry,
    as_matrix,
)
from app.models.system import MinimalityReport, StateSpaceSystem, Trajectory
from app.models.certificate import (
    Certificate,
    CertificateKind,
    Definiteness,
    VerdictReport,
)
from app.models.storage import (
    KernelInvarianceReport,
    RelaxationVerdict,
    StorageCertificate,
    StorageKind,
)

__all__ = [
    "LinearConstraintSystem",
    "SolutionStatus",
    "StructuredSolution",
    "Symmetry",
    "as_matrix",
    "MinimalityReport",
    "StateSpaceSystem",
    "Trajectory",
    "Certificate",
    "CertificateKind",
    "Definiteness",
    "VerdictReport",
    "KernelInvarianceReport",
    "RelaxationVerdict",
    "StorageCertificate",
    "StorageKind",
]
