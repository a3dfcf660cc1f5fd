"""System document schema for the JSON surface."""
import math
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from app.exceptions import DocumentError, LtiSymError
from app.models.system import StateSpaceSystem

Matrix = List[List[float]]


def _reject_non_finite(value, name: str):
    for row in value:
        for entry in row:
            if not math.isfinite(entry):
                raise ValueError(f"{name} has a non-finite entry")
    return value


def matrix_to_list(M) -> Matrix:
    """Row-major nested list of plain floats."""
    return [[float(x) for x in row] for row in np.atleast_2d(np.asarray(M, dtype=float))] if np.size(M) else []


class SystemDocument(BaseModel):
    """Schema for a state-space system document."""
    name: str = Field(default="system", min_length=1, max_length=255)
    A: Matrix
    B: Matrix
    C: Matrix
    D: Optional[Matrix] = None
    sigma: Optional[List[float]] = None
    description: Optional[str] = None
    provenance: Optional[str] = None
    ground_truth: Dict[str, Matrix] = Field(default_factory=dict)

    class Config:
        extra = "forbid"

    @field_validator("A", "B", "C", "D")
    @classmethod
    def finite_matrix(cls, value, info):
        if value is None:
            return value
        return _reject_non_finite(value, info.field_name)

    @field_validator("sigma")
    @classmethod
    def signature_entries(cls, value):
        if value is not None and any(entry not in (1.0, -1.0) for entry in value):
            raise ValueError("sigma entries must be +1 or -1")
        return value

    @field_validator("ground_truth")
    @classmethod
    def finite_ground_truth(cls, value):
        for key, M in value.items():
            _reject_non_finite(M, key)
        return value

    @model_validator(mode="after")
    def consistent_shapes(self):
        try:
            self.to_system()
        except LtiSymError as exc:
            raise ValueError(exc.message) from exc
        return self

    def to_system(self) -> StateSpaceSystem:
        """Build the StateSpaceSystem; raises DimensionError on shape mismatch."""
        n = len(self.A)
        B = np.array(self.B, dtype=float).reshape(n, -1) if n else np.zeros((0, len(self.C)))
        return StateSpaceSystem(
            A=np.array(self.A, dtype=float).reshape(n, n),
            B=B,
            C=self.C,
            D=self.D,
            sigma=self.sigma,
            name=self.name,
        )

    @classmethod
    def from_system(
        cls,
        sys: StateSpaceSystem,
        ground_truth: Optional[Dict[str, np.ndarray]] = None,
        description: Optional[str] = None,
        provenance: Optional[str] = None,
    ) -> "SystemDocument":
        return cls(
            name=sys.name,
            A=matrix_to_list(sys.A),
            B=matrix_to_list(sys.B),
            C=matrix_to_list(sys.C),
            D=matrix_to_list(sys.D),
            sigma=[float(s) for s in sys.sigma],
            description=description,
            provenance=provenance,
            ground_truth={key: matrix_to_list(M) for key, M in (ground_truth or {}).items()},
        )


def load_system_document(text: str) -> SystemDocument:
    """
    Parse and validate a system document.

    Raises:
        DocumentError: On malformed JSON or schema violations
    """
    try:
        return SystemDocument.model_validate_json(text)
    except ValidationError as exc:
        raise DocumentError(f"invalid system document: {exc.errors(include_url=False)}") from exc
