"""Exception types shared across the package.

Plain ``ValueError`` is reserved for structural misuse of the library API
(dimension mismatches, NaN inputs). The classes below mark conditions the
command line maps to dedicated exit codes.
"""


class CrowdPolicyError(Exception):
    """Base class for domain errors raised by this package."""


class ValidationError(CrowdPolicyError, ValueError):
    """A scenario or policy file failed parsing or validation."""


class InfeasibleError(CrowdPolicyError):
    """No admissible contributor remains for some decision."""


class OracleGuardError(CrowdPolicyError):
    """An exhaustive oracle refused an instance that is too large."""
