"""
LTI model tests: transfer matrices, impulse responses, realization
checks, companion systems and simulation.
"""
import numpy as np
import pytest

from app.exceptions import DimensionError, GridTooCoarse, NegativeTime, SingularResolvent
from app.models.system import StateSpaceSystem
from app.services import lti
from tests.utils import create_rc_pair, create_test_system


class TestStateSpaceSystem:
    """Construction and validation of the system model."""

    def test_defaults(self, scalar):
        assert scalar.n == 1 and scalar.m == 1
        assert np.allclose(scalar.D, 0.0)
        assert scalar.sigma_is_identity

    def test_arrays_are_read_only(self, scalar):
        with pytest.raises(ValueError):
            scalar.A[0, 0] = 3.0

    def test_unequal_port_count_rejected(self):
        with pytest.raises(DimensionError):
            StateSpaceSystem(A=[[-1.0]], B=[[1.0, 1.0]], C=[[1.0]])

    def test_signature_entries(self):
        with pytest.raises(DimensionError):
            create_test_system(sigma=[0.5])

    def test_non_finite_entries(self):
        with pytest.raises(DimensionError):
            create_test_system(A=[[np.nan]])

    def test_replace_keeps_other_fields(self, scalar):
        changed = scalar.replace(sigma=[-1.0])
        assert changed.sigma[0] == -1.0
        assert np.allclose(changed.A, scalar.A)


class TestTransfer:
    """K(s) = C(sI - A)⁻¹B + D and the impulse response."""

    def test_point_mass_transfer(self, point_mass):
        assert lti.transfer(point_mass, 2.0)[0, 0] == pytest.approx(0.25, abs=1e-14)

    def test_point_mass_impulse_response(self, point_mass):
        # W(t, τ) = t - τ at (3, 1)
        assert lti.impulse_response(point_mass, 3.0 - 1.0)[0, 0] == pytest.approx(2.0, abs=1e-12)

    def test_scalar_transfer(self, scalar):
        assert lti.transfer(scalar, 1.0)[0, 0] == pytest.approx(0.5)

    def test_pole_rejected(self, point_mass):
        with pytest.raises(SingularResolvent):
            lti.transfer(point_mass, 0.0)

    def test_negative_time(self, scalar):
        with pytest.raises(NegativeTime):
            lti.impulse_response(scalar, -1.0)

    def test_transfer_many_shape(self, rc_pair):
        stacked = lti.transfer_many(rc_pair, [1.0, 2.0, 1j])
        assert stacked.shape == (3, 1, 1)
        assert stacked[0, 0, 0] == pytest.approx(0.5 + 1.0 / 3.0)


class TestRealization:
    """Controllability, observability and companion systems."""

    def test_minimal_fixtures(self, scalar, point_mass, lc, rc_pair):
        for sys in (scalar, point_mass, lc, rc_pair):
            assert lti.is_minimal(sys)

    def test_unobservable_pair(self):
        sys = create_rc_pair(C=[[1.0, 0.0]])
        report = lti.minimality(sys)
        assert report.controllable
        assert not report.observable
        assert report.obsv_rank == 1
        assert not report.minimal

    def test_dual_transposes_transfer(self, gyrator):
        s = 0.7 + 0.4j
        assert np.allclose(lti.transfer(lti.dual_system(gyrator), s), lti.transfer(gyrator, s).T)

    def test_adjoint_reflects_frequency(self, gyrator):
        s = 0.7 + 0.4j
        assert np.allclose(lti.transfer(lti.adjoint_system(gyrator), s), lti.transfer(gyrator, -s).T)

    def test_similarity_preserves_transfer(self, gyrator, rng):
        T = rng.standard_normal((2, 2)) + 2 * np.eye(2)
        moved = lti.similarity_transform(gyrator, T)
        for s in (0.5, 1.0 + 1j, 3j):
            assert np.allclose(lti.transfer(moved, s), lti.transfer(gyrator, s))

    def test_similarity_shape_check(self, gyrator):
        with pytest.raises(DimensionError):
            lti.similarity_transform(gyrator, np.eye(3))


class TestSimulation:
    """Fixed-step RK4 integration and grids."""

    def test_step_response(self, scalar):
        times = lti.step_grid(5.0, 0.01)
        trajectory = lti.simulate(scalar, times, np.ones((times.size, 1)))
        assert np.allclose(trajectory.outputs[:, 0], 1.0 - np.exp(-times), atol=1e-9)
        assert trajectory.h == pytest.approx(0.01)

    def test_free_oscillation(self, lc):
        times = lti.step_grid(2 * np.pi, 2 * np.pi / 2000)
        trajectory = lti.simulate(lc, times, np.zeros((times.size, 1)), x0=[1.0, 0.0])
        assert np.allclose(trajectory.final_state, [1.0, 0.0], atol=1e-9)

    def test_grid_too_coarse(self, scalar):
        times = lti.step_grid(5.0, 1.0)
        with pytest.raises(GridTooCoarse):
            lti.simulate(scalar, times, np.zeros((times.size, 1)))

    def test_step_grid(self):
        grid = lti.step_grid(1.0, 0.1)
        assert grid.size == 11
        assert grid[-1] == pytest.approx(1.0)

    def test_default_horizon(self, scalar, point_mass):
        assert lti.default_horizon(scalar) == pytest.approx(15.0)
        assert lti.default_horizon(point_mass) == pytest.approx(100.0)

    def test_cell_integrals_scalar(self):
        h = 0.5
        E, I1, I2 = lti.cell_integrals(np.array([[-1.0]]), h)
        assert E[0, 0] == pytest.approx(np.exp(-h))
        assert I1[0, 0] == pytest.approx(1.0 - np.exp(-h))
        assert I2[0, 0] == pytest.approx(h - 1.0 + np.exp(-h))
