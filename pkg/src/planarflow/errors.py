"""Exception hierarchy shared by all modules."""


class PlanarFlowError(Exception):
    """Base class for domain errors raised by this package."""

    kind = "error"


class StructuralError(PlanarFlowError, ValueError):
    """Malformed map or mismatched map/function pairing."""

    kind = "structural"


class UnsupportedInputError(PlanarFlowError, ValueError):
    """Input is well formed but outside what an operation supports."""

    kind = "unsupported-input"


class ContractError(PlanarFlowError, ValueError):
    """A documented precondition was violated."""

    kind = "contract"


class InvariantViolation(PlanarFlowError, AssertionError):
    """A guaranteed property failed; indicates a bug, not bad input."""

    kind = "invariant-violation"


class ResourceError(PlanarFlowError):
    """Requested instance exceeds the configured size cap."""

    kind = "resource"


class DegenerateMeridianError(PlanarFlowError):
    """No admissible meridian found within the perturbation budget."""

    kind = "degenerate-meridian"
