"""
Exception hierarchy.

Every failure raised by the services derives from LtiSymError and carries a
short machine-readable ``code``; the CLI error handler maps these onto
verdict entries.
"""
from typing import Any, Dict, Optional


class LtiSymError(Exception):
    """Base class for all ltisym errors."""

    code = "error"

    def __init__(self, message: str = "", **context: Any):
        super().__init__(message or self.code)
        self.message = message or self.code
        self.context: Dict[str, Any] = context

    def to_dict(self) -> Dict[str, Any]:
        payload = {"code": self.code, "message": self.message}
        payload.update({k: v for k, v in self.context.items() if v is not None})
        return payload


class DimensionError(LtiSymError):
    code = "dimension"


class DocumentError(LtiSymError):
    """Malformed input document."""
    code = "document"


# matcore

class MatrixEquationError(LtiSymError):
    code = "matrix_equation"


class SpectrumOverlap(MatrixEquationError):
    code = "spectrum_overlap"


class NotHurwitz(MatrixEquationError):
    code = "not_hurwitz"


class NotSymmetric(MatrixEquationError):
    code = "not_symmetric"


class ImaginaryAxisEigenvalue(MatrixEquationError):
    code = "imaginary_axis_eigenvalue"


class NotStabilizable(MatrixEquationError):
    code = "not_stabilizable"


class NotPositiveSemidefinite(MatrixEquationError):
    code = "not_psd"


# lti

class SystemModelError(LtiSymError):
    code = "system_model"


class SingularResolvent(SystemModelError):
    code = "singular_resolvent"


class NegativeTime(SystemModelError):
    code = "negative_time"


class GridTooCoarse(SystemModelError):
    code = "grid_too_coarse"


class NotMinimal(SystemModelError):
    code = "not_minimal"


class NotControllable(SystemModelError):
    code = "not_controllable"


# certify

class CertificateError(LtiSymError):
    code = "certificate"


class Infeasible(CertificateError):
    code = "infeasible"

    def __init__(self, message: str = "", residual: Optional[float] = None, **context: Any):
        super().__init__(message, residual=residual, **context)
        self.residual = residual


class NonUnique(CertificateError):
    code = "non_unique"

    def __init__(self, message: str = "", family_dim: Optional[int] = None, **context: Any):
        super().__init__(message, family_dim=family_dim, **context)
        self.family_dim = family_dim


class NotInvolution(CertificateError):
    code = "not_involution"


class KindClash(CertificateError):
    code = "kind_clash"


class ThirdInvalid(CertificateError):
    code = "third_invalid"


class CompatibilityFailed(CertificateError):
    code = "compatibility_failed"


class OddDimension(CertificateError):
    code = "odd_dimension"


# passivity

class PassivityError(LtiSymError):
    code = "passivity"


class NotPassive(PassivityError):
    code = "not_passive"


class SingularFeedthrough(PassivityError):
    code = "singular_feedthrough"


class PropositionViolated(PassivityError):
    code = "proposition_violated"


class NoConvergence(PassivityError):
    code = "no_convergence"

    def __init__(self, message: str = "", residual: Optional[float] = None, **context: Any):
        super().__init__(message, residual=residual, **context)
        self.residual = residual


class IterateSingular(PassivityError):
    code = "iterate_singular"


class Indefinite(PassivityError):
    code = "indefinite"


# forms

class FormError(LtiSymError):
    code = "form"


class AsymmetricP(FormError):
    code = "asymmetric_p"


class NotCompatible(FormError):
    code = "not_compatible"


class SignatureNotIdentity(FormError):
    code = "signature_not_identity"


class BlockDefinitenessFailed(FormError):
    code = "block_definiteness_failed"


class NotRelaxation(FormError):
    code = "not_relaxation"


class FeedthroughNonzero(FormError):
    code = "feedthrough_nonzero"


class EigenspaceImbalance(FormError):
    code = "eigenspace_imbalance"


class NormalFormMismatch(FormError):
    code = "normal_form_mismatch"


# hankel

class HankelError(LtiSymError):
    code = "hankel"


class NotReciprocal(HankelError):
    code = "not_reciprocal"


class SingularGramian(HankelError):
    code = "singular_gramian"


# geometry

class GeometryError(LtiSymError):
    code = "geometry"


class NotDirac(GeometryError):
    code = "not_dirac"


class NotLagrangian(GeometryError):
    code = "not_lagrangian"


class ConstraintViolated(GeometryError):
    code = "constraint_violated"


# Preconditions unmet rather than property disproved; reported as "unknown".
PRECONDITION_ERRORS = (
    DimensionError,
    NotHurwitz,
    NotMinimal,
    NotControllable,
    NonUnique,
    NotInvolution,
    SingularFeedthrough,
    SignatureNotIdentity,
    ImaginaryAxisEigenvalue,
    SingularGramian,
    GridTooCoarse,
    NoConvergence,
    IterateSingular,
)
