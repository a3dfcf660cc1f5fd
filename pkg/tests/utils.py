"""
Test utilities and helpers.
"""
from typing import Any, Dict

import numpy as np

from app.models.system import StateSpaceSystem
from app.services import lti


def create_test_system(**overrides) -> StateSpaceSystem:
    """Scalar relaxation system 1/(s+1) with optional overrides."""
    fields = {"A": [[-1.0]], "B": [[1.0]], "C": [[1.0]], "D": None, "sigma": None, "name": "scalar"}
    fields.update(overrides)
    return StateSpaceSystem(**fields)


def create_point_mass(**overrides) -> StateSpaceSystem:
    """q̈ = u, y = q: K(s) = 1/s²."""
    fields = {"A": [[0.0, 1.0], [0.0, 0.0]], "B": [[0.0], [1.0]], "C": [[1.0, 0.0]], "name": "point-mass"}
    fields.update(overrides)
    return StateSpaceSystem(**fields)


def create_lc_oscillator(**overrides) -> StateSpaceSystem:
    """Unit LC tank driven by current, voltage output: K(s) = s/(s²+1)."""
    fields = {"A": [[0.0, 1.0], [-1.0, 0.0]], "B": [[0.0], [1.0]], "C": [[0.0, 1.0]], "name": "lc"}
    fields.update(overrides)
    return StateSpaceSystem(**fields)


def create_rc_pair(**overrides) -> StateSpaceSystem:
    """1/(s+1) + 1/(s+2)."""
    fields = {"A": np.diag([-1.0, -2.0]), "B": [[1.0], [1.0]], "C": [[1.0, 1.0]], "name": "rc-pair"}
    fields.update(overrides)
    return StateSpaceSystem(**fields)


def create_nonneg_fixture(**overrides) -> StateSpaceSystem:
    """Normal-form blocks F = 0, P = S = H = 1: K(s) = 1/(1 - s²)."""
    fields = {"A": [[0.0, -1.0], [-1.0, 0.0]], "B": [[0.0], [1.0]], "C": [[1.0, 0.0]], "name": "nonneg"}
    fields.update(overrides)
    return StateSpaceSystem(**fields)


def create_gyrator(**overrides) -> StateSpaceSystem:
    fields = {"A": [[0.0, 1.0], [-1.0, -1.0]], "B": np.eye(2), "C": np.eye(2), "name": "gyrator"}
    fields.update(overrides)
    return StateSpaceSystem(**fields)


def create_test_system_document(**overrides) -> Dict[str, Any]:
    """JSON-ready system document for the scalar relaxation system."""
    return {
        "name": "scalar",
        "A": [[-1.0]],
        "B": [[1.0]],
        "C": [[1.0]],
        "D": [[0.0]],
        "sigma": [1.0],
        **overrides,
    }


def system_document(sys: StateSpaceSystem, **overrides) -> Dict[str, Any]:
    return {
        "name": sys.name,
        "A": sys.A.tolist(),
        "B": sys.B.tolist(),
        "C": sys.C.tolist(),
        "D": sys.D.tolist(),
        "sigma": sys.sigma.tolist(),
        **overrides,
    }


def transfer_defect(first: StateSpaceSystem, second: StateSpaceSystem, points: int = 20) -> float:
    """Largest |K₁(iω) - K₂(iω)| over log-spaced ω in [0.05, 50]."""
    worst = 0.0
    for w in np.logspace(np.log10(0.05), np.log10(50.0), points):
        s = 1j * w + 0.3
        worst = max(worst, float(np.max(np.abs(lti.transfer(first, s) - lti.transfer(second, s)))))
    return worst


def assert_report_document(data: Dict[str, Any]):
    """Assert report document has all required fields."""
    assert "version" in data
    assert "command" in data
    assert "tolerances" in data
    assert "verdicts" in data
    assert "certificates" in data
