"""
Generator tests
===============

Seeded recipes must embed certificates that satisfy their defining
equations exactly.
"""
import numpy as np
import pytest

from app.exceptions import DimensionError, OddDimension
from app.models.certificate import CertificateKind
from app.services import certify, generators, lti
from app.services.generators import GeneratorKind

CERTIFICATE_KINDS = {
    "G": CertificateKind.RECIPROCAL,
    "Omega": CertificateKind.IO_HAMILTONIAN,
    "Q": CertificateKind.CYCLO_LOSSLESS,
    "R": CertificateKind.TIME_REVERSIBLE,
}


class TestGenerate:

    @pytest.mark.parametrize("kind", list(GeneratorKind))
    def test_certificates_hold(self, kind):
        for seed in range(10):
            generated = generators.generate(kind, 4, m=2, seed=seed)
            assert generated.kind == kind
            for key, M in generated.certificates.items():
                if key in CERTIFICATE_KINDS:
                    assert certify.check_certificate(generated.system, CERTIFICATE_KINDS[key], M), f"{key} seed {seed}"

    @pytest.mark.parametrize("kind", list(GeneratorKind))
    def test_minimal(self, kind):
        generated = generators.generate(kind, 6, m=1, seed=13)
        assert lti.is_minimal(generated.system)

    def test_reproducible(self):
        first = generators.generate(GeneratorKind.RECIPROCAL, 3, seed=42)
        second = generators.generate(GeneratorKind.RECIPROCAL, 3, seed=42)
        assert np.array_equal(first.system.A, second.system.A)
        assert np.array_equal(first.certificates["G"], second.certificates["G"])
        assert first.system.name == "reciprocal-n3-m1-seed42"

    def test_default_seed(self):
        generated = generators.generate(GeneratorKind.LOSSLESS, 2)
        assert generated.seed == 0

    def test_relaxation_structure(self):
        generated = generators.generate(GeneratorKind.RELAXATION, 5, m=2, seed=9)
        sys = generated.system
        assert sys.sigma_is_identity
        assert np.all(np.linalg.eigvalsh(generated.certificates["G"]) > 0)
        assert np.all(np.linalg.eigvals(sys.A).real < 0)
        assert np.all(np.linalg.eigvalsh(sys.D + sys.D.T) >= -1e-12)

    def test_time_reversible_triple(self):
        generated = generators.generate(GeneratorKind.TIME_REVERSIBLE, 6, m=1, seed=2)
        R, Omega = generated.certificates["R"], generated.certificates["Omega"]
        assert np.allclose(R @ R, np.eye(6), atol=1e-10)
        assert np.allclose(R.T @ Omega @ R, -Omega, atol=1e-9)

    @pytest.mark.parametrize("kind", [GeneratorKind.IO_HAMILTONIAN, GeneratorKind.TIME_REVERSIBLE])
    def test_odd_dimension(self, kind):
        with pytest.raises(OddDimension):
            generators.generate(kind, 3)

    def test_empty_dimension(self):
        with pytest.raises(DimensionError):
            generators.generate(GeneratorKind.RECIPROCAL, 0)

    def test_kind_from_string(self):
        assert generators.generate("lossless", 2, seed=1).kind == GeneratorKind.LOSSLESS


class TestConjugate:

    def test_preserves_transfer_and_certificates(self, rng):
        generated = generators.generate(GeneratorKind.TIME_REVERSIBLE, 4, m=1, seed=8)
        T = np.eye(4) + 0.3 * rng.standard_normal((4, 4))
        moved = generators.conjugate(generated, T)
        s = 0.5 + 2.0j
        assert np.allclose(lti.transfer(moved.system, s), lti.transfer(generated.system, s))
        for key in ("G", "Omega", "R"):
            assert certify.check_certificate(moved.system, CERTIFICATE_KINDS[key], moved.certificates[key]), key
