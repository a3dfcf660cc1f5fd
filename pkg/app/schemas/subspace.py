"""Subspace document schema for the geometry command."""
from typing import Optional

import numpy as np
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from app.exceptions import DocumentError, LtiSymError
from app.models.subspace import LinearSubspace
from app.schemas.system import Matrix, _reject_non_finite
from app.services.geometry import graph_subspace


class SubspaceDocument(BaseModel):
    """
    A subspace of F×E, given either by spanning columns ``basis`` (2n rows,
    F-part first) or as the graph {(f, Mf)} of a square ``graph`` matrix.
    """
    name: str = Field(default="subspace", min_length=1, max_length=255)
    basis: Optional[Matrix] = None
    graph: Optional[Matrix] = None
    description: Optional[str] = None

    class Config:
        extra = "forbid"

    @field_validator("basis", "graph")
    @classmethod
    def finite_matrix(cls, value, info):
        if value is None:
            return value
        return _reject_non_finite(value, info.field_name)

    @model_validator(mode="after")
    def exactly_one_source(self):
        if (self.basis is None) == (self.graph is None):
            raise ValueError("give exactly one of basis or graph")
        try:
            self.to_subspace()
        except LtiSymError as exc:
            raise ValueError(exc.message) from exc
        return self

    def to_subspace(self) -> LinearSubspace:
        if self.graph is not None:
            return graph_subspace(np.array(self.graph, dtype=float))
        return LinearSubspace.from_spanning(np.array(self.basis, dtype=float))


def load_subspace_document(text: str) -> SubspaceDocument:
    """
    Raises:
        DocumentError: On malformed JSON or schema violations
    """
    try:
        return SubspaceDocument.model_validate_json(text)
    except ValidationError as exc:
        raise DocumentError(f"invalid subspace document: {exc.errors(include_url=False)}") from exc
