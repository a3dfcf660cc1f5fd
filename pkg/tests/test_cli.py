"""
Command-line tests
==================

Documents in, report documents out, exit code 0 for every completed
analysis and 2 for input errors.
"""
import json
from io import StringIO

import numpy as np
import pytest

from app.cli.main import main
from app.schemas.report import dump_json
from app.services import generators
from app.services.generators import GeneratorKind
from config.settings import settings
from tests.utils import (
    assert_report_document,
    create_lc_oscillator,
    create_nonneg_fixture,
    create_point_mass,
    create_rc_pair,
    create_test_system_document,
    system_document,
)


def run_cli(*argv, stdin_text: str = ""):
    """Run the CLI in-process; returns (exit code, stdout text, stderr text)."""
    stdout, stderr = StringIO(), StringIO()
    code = main(list(argv), stdin=StringIO(stdin_text), stdout=stdout, stderr=stderr)
    return code, stdout.getvalue(), stderr.getvalue()


def run_json(*argv, stdin_text: str = ""):
    code, out, err = run_cli(*argv, stdin_text=stdin_text)
    assert code == 0, err
    return json.loads(out)


@pytest.fixture
def write_document(tmp_path):
    def write(name, payload):
        path = tmp_path / name
        path.write_text(json.dumps(payload), encoding="utf-8")
        return str(path)
    return write


class TestCertifyCommand:

    def test_point_mass_io_hamiltonian(self, write_document):
        path = write_document("point-mass.json", system_document(create_point_mass()))
        report = run_json("certify", path, "--property", "iohamiltonian")
        assert_report_document(report)
        assert report["verdicts"]["iohamiltonian"]["value"] is True
        assert report["verdicts"]["iohamiltonian"]["certificate"] == "iohamiltonian"
        entry = report["certificates"]["iohamiltonian"]
        assert entry["symbol"] == "Omega"
        assert np.allclose(entry["matrix"], [[0.0, -1.0], [1.0, 0.0]], atol=1e-10)

    def test_scalar_all_properties(self):
        report = run_json("certify", "-", stdin_text=json.dumps(create_test_system_document()))
        verdicts = report["verdicts"]
        assert verdicts["reciprocal"]["value"] is True
        assert verdicts["iohamiltonian"]["value"] is False
        assert verdicts["lossless"]["value"] is False
        assert verdicts["passive"]["value"] is True
        assert verdicts["relaxation"]["value"] is True
        assert np.allclose(report["certificates"]["relaxation"]["matrix"], [[1.0]])
        assert report["spectral"]["relaxation"]["GA_psd"] is True

    def test_lc_is_lossless_not_relaxation(self, write_document):
        path = write_document("lc.json", system_document(create_lc_oscillator()))
        report = run_json("certify", path)
        assert report["verdicts"]["lossless"]["value"] is True
        assert report["verdicts"]["relaxation"]["value"] is False
        assert report["verdicts"]["passive"]["value"] is True

    def test_non_minimal_is_unknown(self):
        document = create_test_system_document(A=[[-1.0, 0.0], [0.0, -1.0]], B=[[1.0], [0.0]], C=[[1.0, 0.0]])
        report = run_json("certify", "-", "--property", "reciprocal", stdin_text=json.dumps(document))
        assert report["verdicts"]["reciprocal"]["value"] == "unknown"
        assert report["verdicts"]["reciprocal"]["reason"].startswith("non_unique")

    def test_non_minimal_relaxation_is_unknown(self):
        document = create_test_system_document(A=[[-1.0, 0.0], [0.0, -1.0]], B=[[1.0], [0.0]], C=[[1.0, 0.0]])
        report = run_json("certify", "-", "--property", "relaxation", stdin_text=json.dumps(document))
        assert report["verdicts"]["relaxation"]["value"] == "unknown"
        assert report["verdicts"]["relaxation"]["reason"].startswith("non_unique")
        assert "relaxation" not in report["certificates"]

    def test_tolerances_recorded(self):
        report = run_json("certify", "-", "--tol", "1e-6", stdin_text=json.dumps(create_test_system_document()))
        assert report["tolerances"]["feas_tol"] == pytest.approx(1e-6)
        assert settings.feas_tol == pytest.approx(1e-8)


class TestInputErrors:

    def test_dimension_mismatch(self):
        document = create_test_system_document(C=[[1.0], [1.0]])
        code, out, err = run_cli("certify", "-", stdin_text=json.dumps(document))
        assert code == 2
        assert out == ""
        assert json.loads(err)["error"]["status"] == 2

    def test_malformed_json(self):
        code, _, err = run_cli("certify", "-", stdin_text="{not json")
        assert code == 2
        assert json.loads(err)["error"]["code"] == "document"

    def test_non_finite_entry(self):
        code, _, _ = run_cli("certify", "-", stdin_text='{"A": [[NaN]], "B": [[1.0]], "C": [[1.0]]}')
        assert code == 2

    def test_unknown_field(self):
        document = create_test_system_document(colour="blue")
        code, _, _ = run_cli("certify", "-", stdin_text=json.dumps(document))
        assert code == 2

    def test_missing_file(self, tmp_path):
        code, _, _ = run_cli("certify", str(tmp_path / "absent.json"))
        assert code == 2

    def test_non_positive_tolerance(self):
        code, _, _ = run_cli("certify", "-", "--tol", "-1", stdin_text=json.dumps(create_test_system_document()))
        assert code == 2

    def test_bad_grid(self):
        code, _, _ = run_cli("hankel", "-", "--grid", "1", stdin_text=json.dumps(create_test_system_document()))
        assert code == 2

    def test_missing_command(self):
        code, _, _ = run_cli()
        assert code == 2


class TestCanonicalizeCommand:

    def test_factorize_nonneg_fixture(self, write_document):
        path = write_document("nonneg.json", system_document(create_nonneg_fixture()))
        report = run_json("canonicalize", path, "--form", "factorize")
        assert report["verdicts"]["factorize"]["value"] is True
        form = report["forms"]["factorize"]
        realization = form["M_realization"]
        assert np.allclose(realization["A"], [[-1.0]], atol=1e-9)
        assert abs((np.array(realization["C"]) @ np.array(realization["B"]))[0, 0]) == pytest.approx(1.0)
        assert form["factorization_residual"] <= 1e-9

    def test_factorize_refuses_point_mass(self, write_document):
        path = write_document("point-mass.json", system_document(create_point_mass()))
        report = run_json("canonicalize", path, "--form", "factorize")
        verdict = report["verdicts"]["factorize"]
        assert verdict["value"] is False
        assert "no PSD storage" in verdict["reason"]
        assert "factorize" not in report["forms"]

    def test_port_hamiltonian_lc(self, write_document):
        path = write_document("lc.json", system_document(create_lc_oscillator()))
        report = run_json("canonicalize", path, "--form", "port-hamiltonian")
        assert report["verdicts"]["port-hamiltonian"]["value"] is True
        assert report["forms"]["port-hamiltonian"]["transfer_residual"] <= 1e-9

    def test_normal_form_time_reversible(self):
        code, out, _ = run_cli("generate", "--kind", "time-reversible", "--n", "4", "--seed", "3")
        assert code == 0
        report = run_json("canonicalize", "-", "--form", "normal-form", stdin_text=out)
        form = report["forms"]["normal-form"]
        assert form["variant"] == "time-reversible"
        assert form["transfer_residual"] <= 1e-8


class TestHankelCommand:

    def test_rc_pair(self, write_document):
        path = write_document("rc.json", system_document(create_rc_pair()))
        report = run_json("hankel", path)
        spectral = report["spectral"]
        gramian = np.array([[1.0 / 2.0, 1.0 / 3.0], [1.0 / 3.0, 1.0 / 4.0]])
        assert np.allclose(spectral["eigenvalues"], np.sort(np.linalg.eigvalsh(gramian))[::-1], atol=1e-10)
        assert spectral["hankel_norm"] == pytest.approx(spectral["eigenvalues"][0])
        assert report["verdicts"]["hankel"]["value"] is True

    def test_grid(self, write_document):
        path = write_document("rc.json", system_document(create_rc_pair()))
        report = run_json("hankel", path, "--grid", "15,0.01")
        spectral = report["spectral"]
        assert spectral["grid"] == {"T": 15.0, "h": 0.01, "points": 1501}
        assert np.allclose(spectral["discretized_eigenvalues"], spectral["eigenvalues"], atol=1e-3)

    def test_default_grid(self, write_document):
        path = write_document("rc.json", system_document(create_rc_pair()))
        grid = run_json("hankel", path)["spectral"]["grid"]
        assert grid["points"] == 101
        assert grid["h"] == pytest.approx(grid["T"] / 100.0)

    def test_grid_over_point_limit(self, write_document):
        path = write_document("rc.json", system_document(create_rc_pair()))
        code, out, err = run_cli("hankel", path, "--grid", "100,0.001")
        assert code == 2
        assert out == ""
        assert json.loads(err)["error"]["points"] == 100001

    def test_grid_limit_from_settings(self, write_document, monkeypatch):
        monkeypatch.setattr(settings, "grid_max_points", 50)
        path = write_document("rc.json", system_document(create_rc_pair()))
        code, _, _ = run_cli("hankel", path, "--grid", "1,0.01")
        assert code == 2

    def test_unstable_is_unknown(self, write_document):
        path = write_document("lc.json", system_document(create_lc_oscillator()))
        report = run_json("hankel", path)
        assert report["verdicts"]["hankel"]["value"] == "unknown"


class TestGeometryCommand:

    def test_skew_graph(self):
        document = json.dumps({"name": "gyrator", "graph": [[0.0, 1.0], [-1.0, 0.0]]})
        assert run_json("geometry", "-", "--test", "dirac", stdin_text=document)["verdicts"]["dirac"]["value"] is True
        assert run_json("geometry", "-", "--test", "separable", stdin_text=document)["verdicts"]["separable"]["value"] is False
        assert run_json("geometry", "-", "--test", "hybrid", stdin_text=document)["verdicts"]["hybrid"]["value"] is False

    def test_hybrid_of_symmetric_graph(self):
        document = json.dumps({"graph": [[2.0, -1.0], [-1.0, 0.5]]})
        report = run_json("geometry", "-", "--test", "hybrid", stdin_text=document)
        assert report["forms"]["hybrid"]["I1"] == [0, 1]
        assert np.allclose(report["forms"]["hybrid"]["S_h"], [[2.0, -1.0], [-1.0, 0.5]], atol=1e-10)

    def test_needs_exactly_one_source(self):
        code, _, _ = run_cli("geometry", "-", "--test", "dirac", stdin_text=json.dumps({"name": "empty"}))
        assert code == 2


class TestGenerateCommand:

    def test_round_trip_through_certify(self):
        code, out, _ = run_cli("generate", "--kind", "reciprocal", "--n", "3", "--seed", "1")
        assert code == 0
        document = json.loads(out)
        assert document["provenance"].startswith("generate --kind reciprocal")
        report = run_json("certify", "-", "--property", "reciprocal", stdin_text=out)
        G = np.array(report["certificates"]["reciprocal"]["matrix"])
        truth = np.array(document["ground_truth"]["G"])
        assert np.linalg.norm(G - truth) <= 1e-8 * np.linalg.norm(truth)

    def test_odd_dimension(self):
        code, _, err = run_cli("generate", "--kind", "iohamiltonian", "--n", "3")
        assert code == 2
        assert json.loads(err)["error"]["code"] == "odd_dimension"

    def test_zero_dimension(self):
        code, _, _ = run_cli("generate", "--kind", "lossless", "--n", "0")
        assert code == 2


class TestBatch:

    def test_directory(self, tmp_path):
        (tmp_path / "b-lc.json").write_text(json.dumps(system_document(create_lc_oscillator())), encoding="utf-8")
        (tmp_path / "a-scalar.json").write_text(json.dumps(create_test_system_document()), encoding="utf-8")
        (tmp_path / "c-broken.json").write_text("[]", encoding="utf-8")
        code, out, _ = run_cli("certify", str(tmp_path), "--property", "reciprocal", "--jobs", "2")
        assert code == 2
        batch = json.loads(out)
        assert [report["name"] for report in batch["reports"]] == ["scalar", "lc"]
        assert list(batch["errors"]) == ["c-broken.json"]


ROUND_TRIP_PROPERTIES = {
    GeneratorKind.RECIPROCAL: ("G", "reciprocal"),
    GeneratorKind.RELAXATION: ("G", "reciprocal"),
    GeneratorKind.IO_HAMILTONIAN: ("Omega", "iohamiltonian"),
    GeneratorKind.LOSSLESS: ("Q", "lossless"),
    GeneratorKind.TIME_REVERSIBLE: ("R", "reversible"),
}


class TestDocuments:
    """Output bytes and generated documents."""

    def test_identical_runs_identical_bytes(self, write_document):
        path = write_document("rc.json", system_document(create_rc_pair()))
        for argv in (("certify", path), ("hankel", path, "--grid", "6,0.05"), ("canonicalize", path, "--form", "pseudo-gradient")):
            first = run_cli(*argv)
            second = run_cli(*argv)
            assert first[0] == 0
            assert first[1] == second[1]

    def test_generate_identical_bytes(self):
        assert run_cli("generate", "--kind", "lossless", "--n", "4", "--seed", "5")[1] == \
            run_cli("generate", "--kind", "lossless", "--n", "4", "--seed", "5")[1]

    def test_seventeen_significant_digits(self):
        _, out, _ = run_cli("certify", "-", "--property", "reciprocal", "--tol", "0.1",
                            stdin_text=json.dumps(create_test_system_document()))
        assert '"feas_tol": 0.10000000000000001' in out
        assert '"null_tol": 1e-10' in out
        assert json.loads(out)["tolerances"]["feas_tol"] == 0.1

    def test_integral_floats_keep_decimal_point(self):
        assert dump_json({"x": [1.0, 2, -0.5], "ok": True, "none": None}) == (
            '{\n  "x": [\n    1.0,\n    2,\n    -0.5\n  ],\n  "ok": true,\n  "none": null\n}'
        )

    @pytest.mark.slow
    @pytest.mark.parametrize("kind", list(GeneratorKind))
    def test_generate_certify_round_trip(self, kind, tmp_path):
        key, prop = ROUND_TRIP_PROPERTIES[kind]
        even = kind in (GeneratorKind.IO_HAMILTONIAN, GeneratorKind.TIME_REVERSIBLE)
        for seed in range(100):
            n = 2 + 2 * (seed % 4) if even else 1 + seed % 8
            m = 1 + seed % 2
            code, out, _ = run_cli("generate", "--kind", kind.value, "--n", str(n), "--m", str(m), "--seed", str(seed))
            assert code == 0
            path = tmp_path / f"{kind.value}-{seed}.json"
            path.write_text(out, encoding="utf-8")

            document = json.loads(path.read_text(encoding="utf-8"))
            generated = generators.generate(kind, n, m=m, seed=seed)
            assert np.array_equal(np.array(document["A"]), generated.system.A), f"seed {seed}"
            assert np.array_equal(np.array(document["ground_truth"][key]), generated.certificates[key]), f"seed {seed}"

            report = run_json("certify", str(path), "--property", prop)
            assert report["verdicts"][prop]["value"] is True, f"seed {seed}"
            found = np.array(report["certificates"][prop]["matrix"])
            truth = generated.certificates[key]
            assert np.linalg.norm(found - truth) <= 1e-8 * np.linalg.norm(truth), f"seed {seed}"
