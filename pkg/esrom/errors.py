"""
This code contains the exception types raised by the esrom package
"""


class EsromError(Exception):
    """Base class for all errors raised by esrom"""


class ConfigError(EsromError, ValueError):
    """Invalid or incomplete configuration"""


class ContractError(EsromError, ValueError):
    """Arguments violate a function's preconditions (shapes, lengths, ranges)"""


class NumericsError(EsromError, RuntimeError):
    """A numerical computation could not proceed"""

    reason = "numerics"


class AdmissibilityError(NumericsError):
    """
    A state left the admissible set of the model (e.g. negative water height or pressure)

    :param message: Human readable description
    :param cells: Indices of the offending cells (may be empty if unknown)
    :param values: Offending conserved or entropy variables
    :param time: Simulation time at which the violation occurred, if known
    """

    reason = "inadmissible_state"

    def __init__(self, message, cells=(), values=None, time=None):
        super().__init__(message)
        self.cells = list(cells)
        self.values = values
        self.time = time

    def __str__(self):
        msg = super().__str__()
        if self.time is not None:
            msg += " (t=%.6g)" % self.time
        return msg


class InadmissibleProjectionError(AdmissibilityError):
    """Entropy variables without an admissible preimage, typically produced by the entropy projection"""

    reason = "inadmissible_projection"


class SingularTangentSpaceError(NumericsError):
    """The manifold Jacobian is numerically rank deficient"""

    reason = "singular_tangent_space"

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class FitError(NumericsError):
    """Manifold fitting could not produce a usable manifold"""

    reason = "fit_failure"


class RomFailedError(NumericsError):
    """A reduced order model run terminated early; the trace holds the details"""

    reason = "rom_failure"

    def __init__(self, message, fail_reason=None, fail_time=None):
        super().__init__(message)
        self.fail_reason = fail_reason
        self.fail_time = fail_time
