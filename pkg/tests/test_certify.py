"""
Structure certificate tests
===========================

Finding, re-verifying and composing the certificates G, Ω, R and Q, plus
the input-output identities behind them.
"""
import numpy as np
import pytest

from app.exceptions import CompatibilityFailed, Infeasible, KindClash, NonUnique, NotMinimal, ThirdInvalid
from app.models.certificate import CertificateKind, Definiteness
from app.models.system import StateSpaceSystem
from app.services import certify, generators
from tests.utils import create_gyrator

POINT_MASS_OMEGA = np.array([[0.0, -1.0], [1.0, 0.0]])


def _relative(M, reference) -> float:
    return float(np.linalg.norm(M - reference) / np.linalg.norm(reference))


class TestReciprocity:
    """G = Gᵀ with AᵀG = GA, BᵀG = σC."""

    def test_scalar(self, scalar):
        cert = certify.find_reciprocal_G(scalar)
        assert np.allclose(cert.matrix, [[1.0]], atol=1e-12)
        assert cert.definiteness == Definiteness.POSDEF

    def test_lc_oscillator(self, lc):
        cert = certify.find_reciprocal_G(lc)
        assert np.allclose(cert.matrix, np.diag([-1.0, 1.0]), atol=1e-10)
        assert cert.definiteness == Definiteness.INDEFINITE
        assert cert.algebraic_residual <= 1e-10

    def test_rc_pair(self, rc_pair):
        assert np.allclose(certify.find_reciprocal_G(rc_pair).matrix, np.eye(2), atol=1e-10)

    def test_point_mass_is_reciprocal(self, point_mass):
        cert = certify.find_reciprocal_G(point_mass)
        assert np.allclose(cert.matrix, [[0.0, 1.0], [1.0, 0.0]], atol=1e-10)

    def test_gyrator_fails(self, gyrator):
        with pytest.raises(Infeasible):
            certify.find_reciprocal_G(gyrator)

    def test_skew_feedthrough_fails(self):
        sys = create_gyrator(A=[[-1.0, 0.0], [0.0, -2.0]], D=[[0.0, 1.0], [-1.0, 0.0]])
        with pytest.raises(Infeasible):
            certify.find_reciprocal_G(sys)

    def test_non_unique_family(self):
        sys = StateSpaceSystem(A=-np.eye(2), B=[[1.0], [0.0]], C=[[1.0, 0.0]])
        with pytest.raises(NonUnique) as exc_info:
            certify.find_reciprocal_G(sys)
        assert exc_info.value.family_dim == 1

    def test_frequency_identity(self, lc):
        assert certify.frequency_residual(lc, CertificateKind.RECIPROCAL) <= 1e-12


class TestIOHamiltonian:
    """Ω = -Ωᵀ with AᵀΩ + ΩA = 0, BᵀΩ = σC."""

    def test_point_mass(self, point_mass):
        cert = certify.find_io_hamiltonian_Omega(point_mass)
        assert np.allclose(cert.matrix, POINT_MASS_OMEGA, atol=1e-10)
        assert cert.algebraic_residual <= 1e-10
        assert cert.frequency_residual <= 1e-10

    def test_odd_dimension_infeasible(self, scalar):
        with pytest.raises(Infeasible):
            certify.find_io_hamiltonian_Omega(scalar)

    def test_lc_is_not_io_hamiltonian(self, lc):
        with pytest.raises(Infeasible):
            certify.find_io_hamiltonian_Omega(lc)

    def test_signature_time_identity(self, point_mass):
        cert = certify.find_io_hamiltonian_Omega(point_mass)
        assert certify.signature_time_identity(point_mass, cert, horizon=1.0, seed=3) < 1e-4


class TestReversibility:
    """Involutions R with RA = -AR."""

    def test_point_mass_time_reversal(self, point_mass):
        cert = certify.find_time_reversal(point_mass)
        assert np.allclose(cert.matrix, np.diag([1.0, -1.0]), atol=1e-10)

    def test_lc_signed_time_reversal(self, lc):
        cert = certify.find_signed_time_reversal(lc)
        assert np.allclose(cert.matrix, np.diag([-1.0, 1.0]), atol=1e-10)

    def test_requires_minimality(self):
        sys = StateSpaceSystem(A=np.zeros((2, 2)), B=[[1.0], [0.0]], C=[[1.0, 0.0]])
        with pytest.raises(NotMinimal):
            certify.find_time_reversal(sys)


class TestLossless:
    """Q = Qᵀ with AᵀQ + QA = 0, BᵀQ = C."""

    def test_lc_oscillator(self, lc):
        cert = certify.find_cyclo_lossless_Q(lc)
        assert np.allclose(cert.matrix, np.eye(2), atol=1e-10)
        assert cert.algebraic_residual <= 1e-10

    def test_dissipative_scalar_fails(self, scalar):
        with pytest.raises(Infeasible):
            certify.find_cyclo_lossless_Q(scalar)


class TestCertificateChecks:
    """Residual re-verification of candidate matrices."""

    def test_accepts_true_certificate(self, lc):
        assert certify.check_certificate(lc, CertificateKind.RECIPROCAL, np.diag([-1.0, 1.0]))

    def test_rejects_corrupted_certificate(self, lc, rng):
        corrupted = np.diag([-1.0, 1.0]) + 1e-3 * rng.standard_normal((2, 2))
        assert not certify.check_certificate(lc, CertificateKind.RECIPROCAL, corrupted)

    def test_rejects_singular_matrix(self, lc):
        assert not certify.check_certificate(lc, CertificateKind.CYCLO_LOSSLESS, np.zeros((2, 2)))

    def test_rejects_wrong_shape(self, lc):
        assert not certify.check_certificate(lc, CertificateKind.CYCLO_LOSSLESS, np.eye(3))

    def test_frequency_samples_avoid_poles(self, lc):
        samples = certify.frequency_samples(lc)
        assert 1j not in samples
        assert 1.0 + 1.0j in samples


class TestComposition:
    """Two of {Ω, G, R} determine the third."""

    def test_point_mass_triple(self, point_mass):
        Omega = certify.find_io_hamiltonian_Omega(point_mass)
        R = certify.find_time_reversal(point_mass)
        G = certify.two_of_three(point_mass, Omega, R)
        assert G.kind == CertificateKind.RECIPROCAL
        assert np.allclose(G.matrix, [[0.0, 1.0], [1.0, 0.0]], atol=1e-10)

        R_again = certify.two_of_three(point_mass, Omega, G)
        assert np.allclose(R_again.matrix, R.matrix, atol=1e-10)

    def test_kind_clash(self, point_mass):
        Omega = certify.find_io_hamiltonian_Omega(point_mass)
        with pytest.raises(KindClash):
            certify.two_of_three(point_mass, Omega, Omega)

    def test_invalid_input(self, point_mass):
        Omega = certify.find_io_hamiltonian_Omega(point_mass)
        R = certify.find_time_reversal(point_mass)
        bad = certify.make_certificate(point_mass, CertificateKind.TIME_REVERSIBLE, -R.matrix)
        with pytest.raises(ThirdInvalid):
            certify.two_of_three(point_mass, Omega, bad)

    def test_lossless_reciprocal_reversal(self, lc):
        Q = certify.find_cyclo_lossless_Q(lc)
        G = certify.find_reciprocal_G(lc)
        R, D_zero, compatible = certify.lossless_reciprocal_reversal(lc, Q, G)
        assert np.allclose(R.matrix, np.diag([-1.0, 1.0]), atol=1e-10)
        assert np.allclose(R.matrix @ R.matrix, np.eye(2), atol=1e-10)
        assert D_zero
        assert compatible

    def test_lossless_reciprocal_reversal_kinds(self, lc):
        G = certify.find_reciprocal_G(lc)
        with pytest.raises(CompatibilityFailed):
            certify.lossless_reciprocal_reversal(lc, G, G)

    def test_integrator_form_relaxation(self):
        sys = StateSpaceSystem(A=[[0.0]], B=[[1.0]], C=[[1.0]])
        Q = certify.make_certificate(sys, CertificateKind.CYCLO_LOSSLESS, np.eye(1))
        G = certify.make_certificate(sys, CertificateKind.RECIPROCAL, np.eye(1))
        R, D_zero, compatible = certify.lossless_reciprocal_reversal(sys, Q, G)
        assert np.allclose(R.matrix, np.eye(1))
        assert D_zero and compatible


class TestInputOutputIdentity:
    """G from reachability experiments: xᵀ(0)Gx(0) = ∫ u(-t)ᵀσy(t) dt."""

    def test_scalar_estimate(self, scalar):
        G_hat = certify.estimate_G_from_io(scalar, T=15.0, h=1e-3)
        assert G_hat[0, 0] == pytest.approx(1.0, abs=5e-3)

    def test_rc_pair_estimate(self, rc_pair):
        G_hat = certify.estimate_G_from_io(rc_pair, T=15.0, h=1e-3)
        assert np.allclose(G_hat, np.eye(2), atol=5e-3)


class TestCertifyAll:
    """Aggregated verdicts."""

    def test_lc_flags(self, lc):
        report = certify.certify_all(lc)
        assert report.flags["reciprocal"] is True
        assert report.flags["lossless"] is True
        assert report.flags["signed-reversible"] is True
        assert report.flags["iohamiltonian"] is False
        assert report.flags["passive"] is True
        assert report.flags["relaxation"] is False
        assert report.certificate(CertificateKind.CYCLO_LOSSLESS) is not None

    def test_non_minimal_is_unknown(self):
        sys = StateSpaceSystem(A=-np.eye(2), B=[[1.0], [0.0]], C=[[1.0, 0.0]])
        report = certify.certify_all(sys)
        assert report.flags["reciprocal"] is None
        assert report.flags["lossless"] is None
        assert report.flags["relaxation"] is None
        assert any(note.startswith("relaxation: non_unique") for note in report.notes)


class TestGeneratedRoundTrip:
    """Seeded structured systems recover their ground truth."""

    @pytest.mark.parametrize(
        "kind,key,finder",
        [
            (generators.GeneratorKind.RECIPROCAL, "G", certify.find_reciprocal_G),
            (generators.GeneratorKind.RELAXATION, "G", certify.find_reciprocal_G),
            (generators.GeneratorKind.IO_HAMILTONIAN, "Omega", certify.find_io_hamiltonian_Omega),
            (generators.GeneratorKind.LOSSLESS, "Q", certify.find_cyclo_lossless_Q),
            (generators.GeneratorKind.TIME_REVERSIBLE, "R", certify.find_time_reversal),
        ],
    )
    def test_recovers_ground_truth(self, kind, key, finder):
        for seed in range(100):
            n = 2 + 2 * (seed % 4) if kind in (generators.GeneratorKind.IO_HAMILTONIAN, generators.GeneratorKind.TIME_REVERSIBLE) else 1 + seed % 8
            generated = generators.generate(kind, n, m=1 + seed % 2, seed=seed)
            cert = finder(generated.system)
            assert _relative(cert.matrix, generated.certificates[key]) <= 1e-8, f"seed {seed}"

    def test_time_reversible_triple_consistent(self):
        for seed in range(100):
            generated = generators.generate(generators.GeneratorKind.TIME_REVERSIBLE, 2 + 2 * (seed % 3), m=1, seed=seed)
            sys = generated.system
            Omega = certify.find_io_hamiltonian_Omega(sys)
            R = certify.find_time_reversal(sys)
            G = certify.two_of_three(sys, Omega, R)
            assert _relative(G.matrix, generated.certificates["G"]) <= 1e-8, f"seed {seed}"
            assert G.frequency_residual <= 1e-8
            assert Omega.frequency_residual <= 1e-8

    def test_relaxation_seed_seven(self):
        generated = generators.generate(generators.GeneratorKind.RELAXATION, 3, seed=7)
        cert = certify.find_reciprocal_G(generated.system)
        assert _relative(cert.matrix, generated.certificates["G"]) <= 1e-8
        assert cert.definiteness == Definiteness.POSDEF

