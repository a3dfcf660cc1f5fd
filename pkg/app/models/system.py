"""State-space system model."""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from app.exceptions import DimensionError
from app.models.matrix import as_matrix


@dataclass(frozen=True, eq=False)
class StateSpaceSystem:
    """
    Square LTI system ẋ = Ax + Bu, y = Cx + Du with signature sigma.

    Arrays are converted to float matrices on construction; D defaults to
    zero and sigma to all ones.
    """
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: Optional[np.ndarray] = None
    sigma: Optional[np.ndarray] = None
    name: str = field(default="system", compare=False)

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        n = A.shape[0] if A.ndim == 2 else int(round(np.sqrt(A.size)))
        A = as_matrix(A, n, n, "A")
        B = np.asarray(self.B, dtype=float)
        if n > 0:
            m = B.shape[1] if B.ndim == 2 else 1
        elif self.D is not None:
            m = np.asarray(self.D, dtype=float).reshape(-1).size
            m = int(round(np.sqrt(m)))
        else:
            m = np.asarray(self.C, dtype=float).shape[0]
        B = as_matrix(B.reshape(n, m) if B.size == n * m else B, n, m, "B")
        C = as_matrix(self.C, m, n, "C")
        D = np.zeros((m, m)) if self.D is None else as_matrix(self.D, m, m, "D")
        sigma = np.ones(m) if self.sigma is None else np.asarray(self.sigma, dtype=float).reshape(-1)
        if sigma.shape != (m,):
            raise DimensionError(f"sigma has {sigma.size} entries, expected {m}")
        if not np.all(np.abs(sigma) == 1.0):
            raise DimensionError("sigma entries must be exactly +1 or -1")
        for attr, value in (("A", A), ("B", B), ("C", C), ("D", D), ("sigma", sigma)):
            value.setflags(write=False)
            object.__setattr__(self, attr, value)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def Sigma(self) -> np.ndarray:
        """Signature as a diagonal matrix."""
        return np.diag(self.sigma)

    @property
    def sigma_is_identity(self) -> bool:
        return bool(np.all(self.sigma == 1.0))

    def replace(self, **changes) -> "StateSpaceSystem":
        fields = {"A": self.A, "B": self.B, "C": self.C, "D": self.D, "sigma": self.sigma, "name": self.name}
        fields.update(changes)
        return StateSpaceSystem(**fields)

    def __repr__(self) -> str:
        return f"StateSpaceSystem(name={self.name!r}, n={self.n}, m={self.m})"


@dataclass(frozen=True)
class MinimalityReport:
    controllable: bool
    observable: bool
    ctrb_rank: int
    obsv_rank: int

    @property
    def minimal(self) -> bool:
        return self.controllable and self.observable


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled input, state and output on a uniform time grid."""
    times: np.ndarray
    states: np.ndarray
    inputs: np.ndarray
    outputs: np.ndarray

    def __post_init__(self):
        counts = {len(self.times), self.states.shape[0], self.inputs.shape[0], self.outputs.shape[0]}
        if len(counts) != 1:
            raise DimensionError("trajectory arrays have unequal sample counts")

    @property
    def h(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]
