"""Semantic exception types shared across the package."""

from __future__ import annotations


class WShiftError(Exception):
    """Base class for all package errors."""


class ParameterError(WShiftError, ValueError):
    """An argument violates its documented domain or type contract."""


class DomainError(ParameterError):
    """A function was evaluated outside its mathematical domain."""


class EmptySampleError(ParameterError):
    """An operation requires a nonempty empirical distribution."""


class UnboundedSupportError(WShiftError):
    """A quantile-difference integral would diverge on the full unit interval.

    Raised when a distribution with unbounded support is used on an
    untrimmed integration window. Trim the weight measure or truncate the
    distribution to a bounded interval before computing the distance.
    """


class SingularDensityError(WShiftError):
    """The null density at a quantile node is numerically zero.

    The limit-law integrand divides by f(F^{-1}(u)); values below 1e-8 on
    the active window would silently bias the simulated law, so they are
    rejected loudly instead of clipped.
    """


class DataFormatError(WShiftError):
    """An input file does not match the documented schema."""
