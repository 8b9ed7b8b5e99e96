"""
Exception hierarchy for the controllability library.

Library code raises these; the command layer maps them to exit codes.
"""


class ControllabilityError(Exception):
    """Base class for all library errors."""


class InputError(ControllabilityError, ValueError):
    """Malformed or inconsistent input."""


class DimensionError(InputError):
    """Shapes do not agree."""

    def __init__(self, what: str, expected: tuple, found: tuple):
        self.what = what
        self.expected = expected
        self.found = found
        super().__init__(f"{what}: expected shape {expected}, found {found}")


class NonFiniteError(InputError):
    """NaN or Inf in a matrix."""


class EmptyMaskError(InputError):
    """Perturbation structure with no free entry."""

    def __init__(self, message: str = "empty perturbation structure"):
        super().__init__(message)


class StructureViolationError(InputError):
    """Perturbation touches an entry that is fixed by the structure."""


class PartitionError(InputError):
    """Partition column out of range."""


class SingularPencilError(ControllabilityError):
    """det(sE - A) vanishes identically; spectral rank test is inconclusive."""


class StlnSolveError(ControllabilityError):
    """The stacked least-squares problem of an STLN step could not be solved."""
