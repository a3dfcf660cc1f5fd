"""
Command handlers: each takes parsed inputs and returns a document.
"""
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from app.cli.error_handler import Evaluation, evaluate
from app.exceptions import DimensionError, DocumentError, SingularFeedthrough
from app.models.certificate import Certificate, CertificateKind
from app.models.storage import RelaxationVerdict, StorageCertificate, StorageKind
from app.models.system import StateSpaceSystem
from app.schemas.report import CertificateEntry, ReportDocument, finite_or_none
from app.schemas.subspace import SubspaceDocument
from app.schemas.system import SystemDocument, matrix_to_list
from app.services import certify, forms, generators, geometry, hankel, lti, passivity
from config.settings import settings

CERTIFICATE_PROPERTIES: Dict[str, Callable[[StateSpaceSystem], Certificate]] = {
    CertificateKind.RECIPROCAL.value: certify.find_reciprocal_G,
    CertificateKind.IO_HAMILTONIAN.value: certify.find_io_hamiltonian_Omega,
    CertificateKind.SIGNED_TIME_REVERSIBLE.value: certify.find_signed_time_reversal,
    CertificateKind.TIME_REVERSIBLE.value: certify.find_time_reversal,
    CertificateKind.CYCLO_LOSSLESS.value: certify.find_cyclo_lossless_Q,
}
PROPERTIES = list(CERTIFICATE_PROPERTIES) + ["passive", "relaxation"]
FORMS = ["pseudo-gradient", "port-hamiltonian", "relaxation", "factorize", "normal-form"]
GEOMETRY_TESTS = ["lagrangian", "dirac", "separable", "hybrid"]

# Mercer samples when no --grid is given.
DEFAULT_MERCER_POINTS = 101


@contextmanager
def tolerance_override(tol: Optional[float]):
    """Temporarily replace settings.feas_tol."""
    if tol is None:
        yield settings
        return
    if not tol > 0:
        raise DocumentError(f"--tol must be positive, got {tol}")
    previous = settings.feas_tol
    settings.feas_tol = float(tol)
    try:
        yield settings
    finally:
        settings.feas_tol = previous


def _plain(value: Any) -> Any:
    """numpy containers to JSON-ready lists and floats."""
    if isinstance(value, np.ndarray):
        if value.ndim == 0:
            return finite_or_none(value)
        if value.ndim == 1:
            return [_plain(x) for x in value]
        return matrix_to_list(value) if value.ndim == 2 else value.tolist()
    if isinstance(value, Mapping):
        return {str(key): _plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(item) for item in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return finite_or_none(value)
    if isinstance(value, complex):
        return [finite_or_none(value.real), finite_or_none(value.imag)]
    return value


def _new_report(command: str, name: str) -> ReportDocument:
    return ReportDocument(command=command, name=name, tolerances=settings.tolerances())


def _storage_entry(storage: StorageCertificate, kind: str) -> CertificateEntry:
    return CertificateEntry(
        kind=kind,
        symbol="Q",
        matrix=matrix_to_list(storage.Q),
        algebraic_residual=max(0.0, -storage.min_slack_eigenvalue),
    )


def _transfer_defect(original: StateSpaceSystem, transformed: StateSpaceSystem) -> float:
    """Largest relative transfer-matrix mismatch on the shared frequency samples."""
    worst = 0.0
    for s in certify.frequency_samples(original):
        K = lti.transfer(original, s)
        worst = max(worst, float(np.linalg.norm(K - lti.transfer(transformed, s)) / (1.0 + np.linalg.norm(K))))
    return worst


# ---------------------------------------------------------------- certify

def passive_storage(sys: StateSpaceSystem) -> StorageCertificate:
    """
    Minimal KYP storage; when D + Dᵀ is singular a relaxation system is
    still certified passive by its metric G.
    """
    try:
        return passivity.kyp_storage(sys, "min")
    except SingularFeedthrough:
        verdict = passivity.relaxation_test(sys)
        if verdict.is_relaxation and passivity.passivity_of_relaxation(sys, verdict.G):
            return passivity.storage_from_matrix(sys, verdict.G, StorageKind.COMPATIBLE)
        raise


def cmd_certify(document: SystemDocument, properties: Sequence[str]) -> ReportDocument:
    sys = document.to_system()
    wanted = PROPERTIES if "all" in properties else [p for p in PROPERTIES if p in properties]
    report = _new_report("certify", sys.name)

    for prop in wanted:
        if prop in CERTIFICATE_PROPERTIES:
            search = CERTIFICATE_PROPERTIES[prop]
            outcome = evaluate(prop, lambda: search(sys))
            if outcome.value is True:
                cert: Certificate = outcome.result
                report.certificates[prop] = CertificateEntry.from_certificate(cert)
                residual = max(cert.algebraic_residual, cert.frequency_residual)
                report.verdicts[prop] = outcome.entry(residual=residual, certificate=prop)
            else:
                report.verdicts[prop] = outcome.entry()
        elif prop == "passive":
            outcome = evaluate(prop, lambda: passive_storage(sys))
            if outcome.value is True:
                storage: StorageCertificate = outcome.result
                report.certificates[prop] = _storage_entry(storage, storage.kind.value)
                report.verdicts[prop] = outcome.entry(
                    residual=max(0.0, -storage.min_slack_eigenvalue), certificate=prop
                )
            else:
                report.verdicts[prop] = outcome.entry()
        else:
            outcome = evaluate(prop, lambda: passivity.relaxation_test(sys))
            if outcome.value is not True:
                report.verdicts[prop] = outcome.entry()
                continue
            verdict: RelaxationVerdict = outcome.result
            report.verdicts[prop] = Evaluation(
                verdict.is_relaxation, reason=verdict.reason or None
            ).entry(certificate=prop)
            if verdict.is_relaxation:
                cert = certify.make_certificate(sys, CertificateKind.RECIPROCAL, verdict.G)
                report.certificates[prop] = CertificateEntry.from_certificate(cert)
                report.verdicts[prop].residual = finite_or_none(
                    max(cert.algebraic_residual, cert.frequency_residual)
                )
            report.spectral.setdefault("relaxation", {}).update(
                {"GA_psd": verdict.GA_psd, "dissipation_slack_min": finite_or_none(verdict.dissipation_slack_min)}
            )
    return report


# ---------------------------------------------------------------- canonicalize

def _port_hamiltonian(sys: StateSpaceSystem) -> Dict[str, Any]:
    G = certify.find_reciprocal_G(sys)
    Q0 = passive_storage(sys)
    Q = passivity.compatible_Q(sys, G, Q0)
    form = forms.to_port_hamiltonian(sys, G, Q)
    return {
        "blocks": form.blocks(),
        "G": G.matrix,
        "Q": Q.Q,
        "compatible_iterations": Q.iterations,
        "transfer_residual": _transfer_defect(sys, form.as_state_space()),
    }


def _pseudo_gradient(sys: StateSpaceSystem) -> Dict[str, Any]:
    G = certify.find_reciprocal_G(sys)
    form = forms.to_pseudo_gradient(sys, G)
    return {
        "blocks": {"G": form.G, "P": form.P, "C": form.C, "D": form.D, "sigma": form.sigma},
        "transfer_residual": _transfer_defect(sys, form.reconstruct()),
    }


def _relaxation(sys: StateSpaceSystem) -> Dict[str, Any]:
    G = certify.find_reciprocal_G(sys)
    form = forms.relaxation_port_form(sys, G)
    return {
        "blocks": form.blocks(),
        "transfer_residual": _transfer_defect(sys, form.as_state_space()),
    }


def _factorize(sys: StateSpaceSystem) -> Dict[str, Any]:
    Omega = certify.find_io_hamiltonian_Omega(sys)
    W = passivity.io_ham_storage_W(sys, Omega)
    normal = forms.nonneg_normal_form(sys, Omega, W)
    factor = forms.spectral_factorize(normal)
    A_M, B_M, C_M = factor.M_realization
    return {
        "T": normal.T,
        "blocks": normal.blocks,
        "X": factor.X,
        "M_realization": {"A": A_M, "B": B_M, "C": C_M},
        "riccati_residual": factor.riccati_residual,
        "factorization_residual": factor.factorization_residual,
        "structure_residual": normal.structure_residual,
    }


def _normal_form(sys: StateSpaceSystem) -> Dict[str, Any]:
    Omega = certify.find_io_hamiltonian_Omega(sys)
    reversal = evaluate("reversible", lambda: certify.find_time_reversal(sys))
    if reversal.value is True:
        normal = forms.time_reversible_normal_form(sys, Omega, reversal.result)
        variant = "time-reversible"
    else:
        W = passivity.io_ham_storage_W(sys, Omega)
        normal = forms.nonneg_normal_form(sys, Omega, W)
        variant = "nonnegative"
    return {
        "variant": variant,
        "T": normal.T,
        "Omega": normal.Omega,
        "blocks": normal.blocks,
        "system": {"A": normal.system.A, "B": normal.system.B, "C": normal.system.C, "D": normal.system.D},
        "structure_residual": normal.structure_residual,
        "transfer_residual": _transfer_defect(sys, normal.system),
    }


CANONICALIZERS: Dict[str, Callable[[StateSpaceSystem], Dict[str, Any]]] = {
    "pseudo-gradient": _pseudo_gradient,
    "port-hamiltonian": _port_hamiltonian,
    "relaxation": _relaxation,
    "factorize": _factorize,
    "normal-form": _normal_form,
}


def cmd_canonicalize(document: SystemDocument, form: str) -> ReportDocument:
    sys = document.to_system()
    report = _new_report("canonicalize", sys.name)
    outcome = evaluate(form, lambda: CANONICALIZERS[form](sys))
    if outcome.value is True:
        result = _plain(outcome.result)
        report.forms[form] = result
        residual = result.get("transfer_residual", result.get("factorization_residual"))
        report.verdicts[form] = outcome.entry(residual=residual)
    else:
        report.verdicts[form] = outcome.entry()
    return report


# ---------------------------------------------------------------- hankel

def parse_grid(text: Optional[str]) -> Optional[Tuple[float, float]]:
    """'T,h' with 0 < h ≤ T and at most settings.grid_max_points samples."""
    if text is None:
        return None
    try:
        horizon, h = (float(part) for part in text.split(","))
    except ValueError as exc:
        raise DocumentError(f"--grid expects 'T,h', got {text!r}") from exc
    if not (0 < h <= horizon and np.isfinite(horizon)):
        raise DocumentError(f"--grid needs 0 < h <= T, got T={horizon}, h={h}")
    points = int(round(horizon / h)) + 1
    if points > settings.grid_max_points:
        raise DocumentError(
            f"--grid T={horizon}, h={h} has {points} points, more than {settings.grid_max_points}",
            points=points,
        )
    return horizon, h


def _hankel(sys: StateSpaceSystem, grid: Optional[Tuple[float, float]]) -> Dict[str, Any]:
    G = certify.find_reciprocal_G(sys)
    data = hankel.hankel_spectrum(sys, G)
    if grid is None:
        horizon = min(lti.default_horizon(sys), settings.grid_horizon_cap)
        h = horizon / (DEFAULT_MERCER_POINTS - 1)
    else:
        horizon, h = grid
    times = lti.step_grid(horizon, h)
    result = {
        "eigenvalues": data.eigenvalues,
        "ctrb_gramian": data.ctrb_gramian,
        "obsv_gramian": data.obsv_gramian,
        "cross_gramian": data.cross_gramian,
        "identity_residuals": data.identity_residuals,
        "hankel_norm": hankel.hankel_norm_oracle(sys),
        "mercer_residual": hankel.mercer_residual(sys, data, times),
        "orthonormality_residual": float(np.max(np.abs(hankel.eigenfunction_gram(data) - np.eye(sys.n)), initial=0.0)),
    }
    result["grid"] = {"T": float(horizon), "h": float(h), "points": int(times.size)}
    if grid is not None:
        result["discretized_eigenvalues"] = hankel.discretized_hankel_eigenvalues(sys, *grid)[: sys.n].real
    return result


def cmd_hankel(document: SystemDocument, grid: Optional[Tuple[float, float]] = None) -> ReportDocument:
    sys = document.to_system()
    report = _new_report("hankel", sys.name)
    outcome = evaluate("hankel", lambda: _hankel(sys, grid))
    if outcome.value is True:
        report.spectral = _plain(outcome.result)
        report.verdicts["hankel"] = outcome.entry(residual=report.spectral["mercer_residual"])
    else:
        report.verdicts["hankel"] = outcome.entry()
    return report


# ---------------------------------------------------------------- geometry

def cmd_geometry(document: SubspaceDocument, test: str) -> ReportDocument:
    S = document.to_subspace()
    report = _new_report("geometry", document.name)
    report.spectral["subspace"] = {"n": S.n, "dim": S.dim}

    if test == "lagrangian":
        report.verdicts[test] = Evaluation(geometry.is_lagrangian(S)).entry()
    elif test == "dirac":
        report.verdicts[test] = Evaluation(geometry.is_dirac(S)).entry()
    elif test == "separable":
        outcome = evaluate(test, lambda: geometry.separable_test(S))
        if outcome.value is True:
            result = outcome.result
            report.verdicts[test] = Evaluation(result.separable).entry(residual=result.cross_pairing)
            if result.separable:
                report.forms[test] = _plain({"K": result.K})
        else:
            report.verdicts[test] = outcome.entry()
    else:
        outcome = evaluate(test, lambda: geometry.hybrid_representation(S))
        if outcome.value is True:
            rep = outcome.result
            report.verdicts[test] = outcome.entry(residual=rep.residual)
            report.forms[test] = _plain({
                "I1": list(rep.I1), "I2": list(rep.I2), "S_h": rep.S_h, "signature": rep.signature,
            })
        else:
            report.verdicts[test] = outcome.entry()
    return report


# ---------------------------------------------------------------- generate

def cmd_generate(kind: str, n: int, m: int = 1, seed: Optional[int] = None) -> SystemDocument:
    try:
        generated = generators.generate(generators.GeneratorKind(kind), n, m, seed)
    except DimensionError as exc:
        raise DocumentError(exc.message, n=n, m=m) from exc
    logger.info(f"generated {generated.system.name} with certificates {sorted(generated.certificates)}")
    return SystemDocument.from_system(
        generated.system,
        ground_truth=generated.certificates,
        provenance=f"generate --kind {generated.kind.value} --n {n} --m {m} --seed {generated.seed}",
    )


def run_many(items: List[Tuple[str, Callable[[], ReportDocument]]], jobs: int = 1) -> List[Tuple[str, Any]]:
    """Run named jobs, optionally on a thread pool; results keep input order."""
    def guarded(fn):
        try:
            return fn()
        except DocumentError as exc:
            return exc

    if jobs <= 1:
        return [(name, guarded(fn)) for name, fn in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        futures = [(name, pool.submit(guarded, fn)) for name, fn in items]
        return [(name, future.result()) for name, future in futures]
