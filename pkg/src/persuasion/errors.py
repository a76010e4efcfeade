"""Exception hierarchy shared across the package.

Every error carries the offending labels/ids in its message so callers can
surface them without string parsing being the only option: structured
context goes in ``details`` where useful.
"""
from __future__ import annotations


class PersuasionError(Exception):
    """Base class for all package errors."""


# -- taxonomy ---------------------------------------------------------------

class DuplicateLabel(PersuasionError):
    pass


class UnknownNodeInEdge(PersuasionError):
    pass


class DuplicateEdge(PersuasionError):
    pass


class MultipleRoots(PersuasionError):
    pass


class CycleDetected(PersuasionError):
    pass


class UnknownLabel(PersuasionError):
    pass


class InvalidLeafIndex(PersuasionError):
    pass


# -- metrics / alignment ----------------------------------------------------

class IdMismatch(PersuasionError):
    def __init__(self, message: str, only_left: set[str] | None = None,
                 only_right: set[str] | None = None):
        super().__init__(message)
        self.only_left = set(only_left or ())
        self.only_right = set(only_right or ())


class EmptyGold(PersuasionError):
    pass


class LengthMismatch(PersuasionError):
    pass


class DuplicateId(PersuasionError):
    pass


# -- numerics ---------------------------------------------------------------

class DimMismatch(PersuasionError):
    pass


class OutsideBall(PersuasionError):
    pass


class NonFiniteInput(PersuasionError):
    pass


class NonFiniteActivation(PersuasionError):
    pass


class NonFiniteLoss(PersuasionError):
    pass


class BadK(PersuasionError):
    pass


class InsideInnerRadius(PersuasionError):
    pass


# -- training / data --------------------------------------------------------

class EmptyTree(PersuasionError):
    pass


class GoldEmpty(PersuasionError):
    pass


class MissingDefinitionFeature(PersuasionError):
    pass


class DegenerateClassBalance(PersuasionError):
    pass


class ProbOutOfRange(PersuasionError):
    pass


class MalformedHeader(PersuasionError):
    pass
