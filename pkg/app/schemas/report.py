"""Report document schemas."""
import json
import math
from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, Field, field_validator

from app import __version__
from app.models.certificate import Certificate
from app.schemas.system import Matrix, matrix_to_list

VerdictValue = Union[bool, Literal["unknown"]]


def finite_or_none(value: Optional[float]) -> Optional[float]:
    if value is None:
        return None
    value = float(value)
    return value if math.isfinite(value) else None


class VerdictEntry(BaseModel):
    """One property verdict; ``certificate`` names the entry under ``certificates``."""
    value: VerdictValue
    residual: Optional[float] = None
    reason: Optional[str] = None
    certificate: Optional[str] = None

    @field_validator("residual")
    @classmethod
    def finite_residual(cls, value):
        return finite_or_none(value)


class CertificateEntry(BaseModel):
    kind: str
    symbol: str
    matrix: Matrix
    algebraic_residual: Optional[float] = None
    frequency_residual: Optional[float] = None
    definiteness: Optional[str] = None

    @classmethod
    def from_certificate(cls, cert: Certificate) -> "CertificateEntry":
        return cls(
            kind=cert.kind.value,
            symbol=cert.kind.symbol,
            matrix=matrix_to_list(cert.matrix),
            algebraic_residual=finite_or_none(cert.algebraic_residual),
            frequency_residual=finite_or_none(cert.frequency_residual),
            definiteness=cert.definiteness.value if cert.definiteness else None,
        )


class ReportDocument(BaseModel):
    """Schema for the output of every analysis command."""
    version: str = __version__
    command: str
    name: str
    tolerances: Dict[str, float] = Field(default_factory=dict)
    verdicts: Dict[str, VerdictEntry] = Field(default_factory=dict)
    certificates: Dict[str, CertificateEntry] = Field(default_factory=dict)
    forms: Dict[str, Any] = Field(default_factory=dict)
    spectral: Dict[str, Any] = Field(default_factory=dict)
    notes: List[str] = Field(default_factory=list)


class BatchReportDocument(BaseModel):
    """Reports for a directory input, ordered by file name."""
    version: str = __version__
    command: str
    reports: List[ReportDocument] = Field(default_factory=list)
    errors: Dict[str, Dict[str, Any]] = Field(default_factory=dict)


def format_float(value: float) -> str:
    """17 significant digits; always carries a decimal point or exponent."""
    text = format(value, ".17g")
    return text if any(c in text for c in ".en") else text + ".0"


def dump_json(value: Any, indent: int = 2, _level: int = 0) -> str:
    """
    JSON text of a dumped document, floats at 17 significant digits.
    """
    pad, inner = " " * (indent * _level), " " * (indent * (_level + 1))
    if isinstance(value, bool) or value is None:
        return json.dumps(value)
    if isinstance(value, float):
        return format_float(value) if math.isfinite(value) else "null"
    if isinstance(value, (int, str)):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f"{inner}{json.dumps(str(k), ensure_ascii=False)}: {dump_json(v, indent, _level + 1)}" for k, v in value.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        items = [inner + dump_json(v, indent, _level + 1) for v in value]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(value).__name__}")


def dump_document(document: BaseModel) -> str:
    return dump_json(document.model_dump(mode="json"))
