"""Exception taxonomy shared across the package."""


class CbyError(Exception):
    """Base class for all package errors."""


class SingularFrame(CbyError):
    """Frame matrix not invertible (|det a| below threshold)."""


class SingularPrincipal(CbyError):
    """A principal time block lost positive definiteness (|B| -> 1 or mu' -> |B|^2)."""


class NonPositiveDensity(CbyError):
    """Fluid energy density mu <= 0 where positivity is required."""


class NotPositiveDefinite(CbyError):
    """A metric that must be positive definite is not."""


class VacuumMode(CbyError):
    """A fluid-only operation was invoked on a vacuum state."""


class BadExponents(CbyError):
    """Kasner exponents fail sum(p) = sum(p^2) = 1."""


class GridTooSmall(CbyError):
    """Grid has too few points for the requested stencil."""


class StepRejected(CbyError):
    """A time step produced an invalid state."""


class FormatError(CbyError):
    """Malformed snapshot file."""

    def __init__(self, message, offset=None):
        super().__init__(message if offset is None else f"{message} (byte offset {offset})")
        self.offset = offset


class ParseError(CbyError):
    """Malformed config text."""

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class ValidationError(CbyError):
    """Config value out of range or unknown key.

    ``hyperbolicity`` marks violations of the symmetric-hyperbolicity
    conditions (e.g. an equation of state with sound speed above light);
    the CLI maps those to the refusal exit status rather than the generic
    config-error status.
    """

    def __init__(self, message, key=None, hyperbolicity=False):
        super().__init__(message)
        self.key = key
        self.hyperbolicity = hyperbolicity
