"""Exception hierarchy.

Every error carries an ``exit_code`` so the command-line front end can map
failures onto distinct process exit statuses without inspecting messages.
"""


class SexticError(Exception):
    exit_code = 1


class DomainError(SexticError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""

    exit_code = 2


class PadeDegeneracyError(DomainError):
    """The Padé linear system is singular or too ill-conditioned."""


class PoleError(DomainError):
    """A rational approximant was evaluated at (or next to) a pole."""


class NonSummableError(DomainError):
    """The Borel-plane approximant has a pole on the integration path."""


class FitWindowError(DomainError):
    """A least-squares window is unusable (too narrow, out of range)."""


class NoiseFloorError(DomainError):
    """Samples fall below the numerical accuracy floor of the solver."""


class ResourceLimitError(SexticError):
    """A configured size or order limit would be exceeded."""

    exit_code = 3


class SolverError(SexticError):
    """The eigensolver failed on a specific block."""

    exit_code = 3

    def __init__(self, message, lam=None, parity=None):
        super().__init__(message)
        self.lam = lam
        self.parity = parity
