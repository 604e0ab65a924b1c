"""Exception hierarchy shared by all fidgeo modules."""

from __future__ import annotations

from typing import Any


class FiducialError(Exception):
    """Base class for every error raised by fidgeo."""


class DomainError(FiducialError, ValueError):
    """An argument lies outside the domain of the family or operation."""


class UnsupportedDomainError(DomainError):
    """A construction needs a domain shape the input family does not have."""


class InvalidFamilyError(FiducialError):
    """A family violates the continuous fiducial model (e.g. a non-monotone RD)."""


class SpecError(FiducialError, ValueError):
    """A family or grid specification could not be parsed.

    ``field`` names the offending key and ``line`` carries the JSON line
    number when the failure came from the decoder.
    """

    def __init__(self, message: str, *, field: str | None = None, line: int | None = None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)


class InsufficientDataError(FiducialError, ValueError):
    """Too few samples to classify a section."""


class GridSymmetryError(FiducialError, ValueError):
    """The theta grid is not symmetric about zero."""


class NotAnFDError(FiducialError):
    """The surface does not define a fiducial distribution.

    The offending :class:`~fidgeo.classify.ExistenceVerdict` is attached as
    ``verdict``.
    """

    def __init__(self, message: str, verdict: Any = None):
        super().__init__(message)
        self.verdict = verdict


class NoCoverageError(FiducialError):
    """The requested probability level is not attained on the grid span."""


class NotReducibleError(FiducialError):
    """The composite RDs do not coincide pairwise in +/-theta."""


class DegenerateCombinationError(FiducialError):
    """The product of fiducial densities vanishes on the whole grid."""


class OracleInapplicableError(FiducialError):
    """The Bayes oracle needs a translation (pivot) family."""


class InconsistencyError(FiducialError):
    """Monotonicity and intersection verdicts disagree at some x-node."""

    def __init__(self, message: str, x0: float | None = None):
        super().__init__(message)
        self.x0 = x0
