"""Exception hierarchy shared by every module.

Errors fall in two families.  ``ValidationError`` flags bad input (the CLI
maps it to exit code 2); ``NumericalError`` flags a computation that could
not meet its tolerance (exit code 3).
"""

from __future__ import annotations


class WKBError(Exception):
    """Base class for all package errors."""


class ValidationError(WKBError, ValueError):
    exit_code = 2


class NumericalError(WKBError, ArithmeticError):
    exit_code = 3


# surface
class InvalidSurface(ValidationError):
    pass


class InvalidTriangulation(ValidationError):
    pass


class NotFlippable(ValidationError):
    pass


class SurfaceMismatch(ValidationError):
    pass


# quiver
class NonRegularTriangulation(ValidationError):
    pass


class UnknownArrow(ValidationError, KeyError):
    pass


class IndexOutOfRange(ValidationError, IndexError):
    pass


# qdiff
class NotGMN(ValidationError):
    pass


class Incomplete(ValidationError):
    pass


class NotAPole(ValidationError):
    pass


class DegenerateRoots(NumericalError):
    pass


class BranchTrackingLost(NumericalError):
    pass


class SaddleDetected(NumericalError):
    pass


class QuadratureFailure(NumericalError):
    pass


class RealResidue(NumericalError):
    pass


class OctagonCollision(NumericalError):
    pass


class DecompositionAmbiguous(NumericalError):
    pass


# teich
class CoincidentPoints(ValidationError):
    pass


class NonPositiveInput(ValidationError):
    pass


class InvalidOrder(ValidationError):
    pass


class Overflow(NumericalError, OverflowError):
    pass


# vortex
class NewtonDiverged(NumericalError):
    pass


class BadDomain(ValidationError):
    pass


class PathLeavesDomain(ValidationError):
    pass
