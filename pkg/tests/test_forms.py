"""
Canonical form tests
====================

Each constructor must preserve the transfer matrix and land on its block
pattern.
"""
import numpy as np
import pytest

from app.exceptions import (
    AsymmetricP,
    BlockDefinitenessFailed,
    EigenspaceImbalance,
    FeedthroughNonzero,
    NotCompatible,
    NotRelaxation,
    NotStabilizable,
    NormalFormMismatch,
)
from app.models.subspace import PairingForms
from app.services import certify, forms, generators, lti
from tests.utils import create_nonneg_fixture, create_test_system, transfer_defect

LC_G = np.diag([-1.0, 1.0])
CANONICAL_OMEGA = np.array([[0.0, -1.0], [1.0, 0.0]])
CANONICAL_W = np.array([[0.0, 1.0], [1.0, 0.0]])


class TestPseudoGradient:
    """Gẋ = -Px + Cᵀσu."""

    def test_lc_potential(self, lc):
        form = forms.to_pseudo_gradient(lc, LC_G)
        assert np.allclose(form.P, [[0.0, 1.0], [1.0, 0.0]])

    def test_reconstruct(self, lc):
        form = forms.to_pseudo_gradient(lc, LC_G)
        assert transfer_defect(lc, form.reconstruct()) <= 1e-12

    def test_generated_reciprocal(self):
        generated = generators.generate(generators.GeneratorKind.RECIPROCAL, 5, m=2, seed=3)
        form = forms.to_pseudo_gradient(generated.system, generated.certificates["G"])
        assert transfer_defect(generated.system, form.reconstruct()) <= 1e-8

    def test_asymmetric_potential(self, gyrator):
        with pytest.raises(AsymmetricP):
            forms.to_pseudo_gradient(gyrator, np.eye(2))


class TestCompatibleCoordinates:
    """TᵀQT = diag(Q1, Q2), TᵀGT = diag(Q1, -Q2)."""

    def test_lc(self):
        coords = forms.compatible_coordinates(LC_G, np.eye(2))
        assert coords.sizes == (1, 1)
        T = coords.T
        assert np.allclose(T.T @ LC_G @ T, np.diag([1.0, -1.0]), atol=1e-12)

    def test_incompatible(self):
        with pytest.raises(NotCompatible):
            forms.compatible_coordinates(LC_G, 2.0 * np.eye(2))

    def test_singular_storage(self):
        with pytest.raises(NotCompatible):
            forms.compatible_coordinates(LC_G, np.zeros((2, 2)))


class TestPortHamiltonian:
    """Two-energy-domain port-Hamiltonian forms."""

    def test_lc_two_domains(self, lc):
        form = forms.to_port_hamiltonian(lc, LC_G, np.eye(2))
        assert np.allclose(form.R, 0.0, atol=1e-12)
        assert np.allclose(form.J, -form.J.T)
        assert transfer_defect(lc, form.as_state_space()) <= 1e-10

    def test_relaxation_single_domain(self):
        generated = generators.generate(generators.GeneratorKind.RELAXATION, 4, m=1, seed=5)
        G = generated.certificates["G"]
        form = forms.to_port_hamiltonian(generated.system, G, G)
        assert form.Q2.size == 0
        assert np.min(np.linalg.eigvalsh(form.R)) >= -1e-10
        assert transfer_defect(generated.system, form.as_state_space()) <= 1e-8

    def test_hamiltonian_is_energy(self, lc):
        form = forms.to_port_hamiltonian(lc, LC_G, np.eye(2))
        x = np.array([0.3, -1.2])
        assert form.hamiltonian(form.T @ x) == pytest.approx(0.5 * x @ x)

    def test_relaxation_port_form(self, scalar):
        form = forms.relaxation_port_form(scalar, [[1.0]])
        assert np.allclose(form.R, [[1.0]])
        assert transfer_defect(scalar, form.as_state_space()) <= 1e-12

    def test_relaxation_port_form_rejects_indefinite(self, lc):
        with pytest.raises(NotRelaxation):
            forms.relaxation_port_form(lc, LC_G)

    def test_relaxation_port_form_rejects_signature(self):
        with pytest.raises(NotRelaxation):
            forms.relaxation_port_form(create_test_system(sigma=[-1.0]), [[1.0]])

    def test_lossless_reversal(self, lc):
        form, reversal = forms.lossless_two_domain_form(lc, LC_G, np.eye(2))
        assert np.allclose(reversal, np.diag([1.0, -1.0]), atol=1e-12)
        assert np.allclose(form.R, 0.0, atol=1e-12)

    def test_lossless_needs_positive_storage(self, lc):
        with pytest.raises(BlockDefinitenessFailed):
            forms.lossless_two_domain_form(lc, LC_G, -np.eye(2))


class TestDerivativeOutput:
    """z = ẏ for IO Hamiltonian systems."""

    def test_point_mass(self, point_mass):
        Omega = certify.find_io_hamiltonian_Omega(point_mass)
        form = forms.io_ham_to_port_ham(point_mass, Omega)
        assert form.energy_skew_residual <= 1e-12
        assert form.feedthrough_skew_residual <= 1e-12
        derivative = form.as_state_space()
        for s in (0.5 + 1.0j, 2.0 - 0.3j):
            assert np.allclose(lti.transfer(derivative, s), s * lti.transfer(point_mass, s))

    def test_energy(self, point_mass):
        form = forms.io_ham_to_port_ham(point_mass, CANONICAL_OMEGA)
        assert form.energy([3.0, 2.0]) == pytest.approx(2.0)

    def test_feedthrough_rejected(self, point_mass):
        with pytest.raises(FeedthroughNonzero):
            forms.io_ham_to_port_ham(point_mass.replace(D=[[1.0]]), CANONICAL_OMEGA)


class TestNormalForms:
    """(q, p) coordinates with canonical Ω."""

    def test_nonneg_fixture_is_canonical(self, nonneg):
        normal = forms.nonneg_normal_form(nonneg, CANONICAL_OMEGA, CANONICAL_W)
        assert np.allclose(normal.T, np.eye(2))
        assert np.allclose(normal.blocks["F"], [[0.0]])
        assert np.allclose(normal.blocks["P"], [[1.0]])
        assert np.allclose(normal.blocks["S"], [[1.0]])
        assert np.allclose(normal.blocks["H"], [[1.0]])
        assert normal.structure_residual <= 1e-12

    def test_nonneg_after_coordinate_change(self):
        T = np.array([[2.0, 0.5], [-0.3, 1.0]])
        sys = lti.similarity_transform(create_nonneg_fixture(), T)
        normal = forms.nonneg_normal_form(sys, T.T @ CANONICAL_OMEGA @ T, T.T @ CANONICAL_W @ T)
        assert normal.structure_residual <= 1e-9
        assert transfer_defect(sys, normal.system) <= 1e-10

    def test_time_reversible(self):
        for seed in range(10):
            generated = generators.generate(generators.GeneratorKind.TIME_REVERSIBLE, 4, m=1, seed=seed)
            certs = generated.certificates
            normal = forms.time_reversible_normal_form(generated.system, certs["Omega"], certs["R"])
            assert np.allclose(normal.Omega, PairingForms.symplectic(2))
            assert np.min(np.linalg.eigvalsh(normal.blocks["P"])) > 0, f"seed {seed}"
            assert transfer_defect(generated.system, normal.system) <= 1e-8, f"seed {seed}"

    def test_reversal_must_be_anti_symplectic(self, point_mass):
        with pytest.raises(NormalFormMismatch):
            forms.time_reversible_normal_form(point_mass, CANONICAL_OMEGA, np.eye(2))

    def test_eigenspace_imbalance(self):
        with pytest.raises(EigenspaceImbalance):
            forms.symplectic_basis(CANONICAL_OMEGA, np.eye(2))


class TestSpectralFactorization:
    """K(s) = M(s)Mᵀ(-s) for nonnegative IO Hamiltonian systems."""

    def test_nonneg_fixture(self, nonneg):
        normal = forms.nonneg_normal_form(nonneg, CANONICAL_OMEGA, CANONICAL_W)
        factor = forms.spectral_factorize(normal)
        A_M, B_M, C_M = factor.M_realization
        assert np.allclose(factor.X, [[1.0]])
        assert np.allclose(A_M, [[-1.0]])
        assert np.allclose(B_M, [[1.0]])
        assert np.allclose(C_M, [[1.0]])
        assert factor.riccati_residual <= 1e-12
        assert factor.factorization_residual <= 1e-10

    def test_from_blocks(self):
        factor = forms.spectral_factorize({"F": [[0.0]], "P": [[1.0]], "S": [[1.0]], "H": [[1.0]]})
        s = 0.4 + 0.7j
        assert np.allclose(factor.M(s) @ factor.M(-s).T, 1.0 / (1.0 - s ** 2))

    def test_riccati_transformation(self, nonneg):
        normal = forms.nonneg_normal_form(nonneg, CANONICAL_OMEGA, CANONICAL_W)
        T, transformed = forms.riccati_transformation(normal)
        assert np.allclose(T, [[1.0, 0.0], [-1.0, 1.0]])
        assert np.allclose(transformed.A, [[-1.0, -1.0], [0.0, 1.0]])
        assert transfer_defect(nonneg, transformed) <= 1e-12

    def test_not_stabilizable(self):
        with pytest.raises(NotStabilizable):
            forms.spectral_factorize({"F": [[1.0]], "P": [[0.0]], "S": [[1.0]], "H": [[1.0]]})
