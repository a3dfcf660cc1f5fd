"""Pydantic document models for the JSON surface."""
from app.schemas.system import SystemDocument, load_system_document, matrix_to_list
from app.schemas.subspace import SubspaceDocument, load_subspace_document
from app.schemas.report import BatchReportDocument, CertificateEntry, ReportDocument, VerdictEntry

__all__ = [
    "SystemDocument",
    "load_system_document",
    "matrix_to_list",
    "SubspaceDocument",
    "load_subspace_document",
    "BatchReportDocument",
    "CertificateEntry",
    "ReportDocument",
    "VerdictEntry",
]
