"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class NPointError(Exception):
    """Base class for all package errors."""


class DomainError(NPointError, ValueError):
    """An argument lies outside the domain of the operation."""


class NormalizationError(DomainError):
    """A distribution does not have unit total mass.

    ``defect`` is the exact amount ``1 - total``.
    """

    def __init__(self, message, defect):
        super().__init__(message)
        self.defect = defect


class ModeError(DomainError):
    """A non-bijective map appeared where only bijections are allowed."""


class InputError(NPointError, ValueError):
    """Malformed or incomplete user input (files, characteristics, matrices)."""


class ResourceError(NPointError):
    """A size guard refused to materialize an object."""


class AmbiguityError(NPointError):
    """More than one recurrent class is reachable from a seed."""

    def __init__(self, message, classes):
        super().__init__(message)
        self.classes = classes
