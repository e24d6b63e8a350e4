"""Exception types shared across the package.

Every error raised deliberately by this package derives from SymtestError,
so callers can catch the whole family with one clause.  Configuration and
data-file problems carry their own subclasses because the command line
interface maps them to distinct exit codes.
"""


class SymtestError(Exception):
    """Base class for all errors raised by this package."""


# ---------------------------------------------------------------------------
# group algebra


class DimensionMismatch(SymtestError):
    """Operands act on spaces of different dimension."""


class VariantMismatch(SymtestError):
    """Group elements of incompatible kinds were combined."""


class NonCompactGroup(SymtestError):
    """The requested group carries no uniform (Haar) probability measure."""


class UnsupportedFamily(SymtestError):
    """The operation is not implemented for this group family."""


class UnsupportedKind(SymtestError):
    """Unknown maximal-invariant or kernel kind."""


class ZeroVector(SymtestError):
    """A representative inversion was requested at a point with no free orbit."""


class InvalidRotation(SymtestError):
    """A matrix that should be a rotation is not one."""


# ---------------------------------------------------------------------------
# kernels / statistics


class SampleTooSmall(SymtestError):
    """Fewer observations than the statistic requires."""


class EmptySample(SymtestError):
    """An empty sample was supplied."""


class AllPointsIdentical(SymtestError):
    """Median pairwise distance is zero, so no bandwidth can be derived."""


class BadLandmarkCount(SymtestError):
    """Landmark count for the low-rank statistic is out of range."""


class BadMonteCarloBudget(SymtestError):
    """Monte Carlo iteration counts must be positive integers."""


class BadProjectionCount(SymtestError):
    """Number of projection directions must be positive."""


class BadParameters(SymtestError):
    """Parameter values outside their admissible range."""


class SingularSolve(SymtestError):
    """A linear solve met an effectively singular matrix."""


class DegenerateDensity(SymtestError):
    """A kernel density estimate vanished where it must be positive."""


class RankDeficientDesign(SymtestError):
    """Regression design matrix does not have full column rank."""


class DegenerateVariance(SymtestError):
    """A variance needed for standardisation is zero."""


class EmptyGrid(SymtestError):
    """A tuning grid with no candidate combinations."""


class TooFewValues(SymtestError):
    """Not enough values for the requested summary."""


# ---------------------------------------------------------------------------
# configuration and data files


class ConfigInvalid(SymtestError):
    """Experiment configuration failed validation."""


class DataFileMissing(SymtestError):
    """Input data file does not exist."""


class SchemaMismatch(SymtestError):
    """Data file columns do not match the declared schema."""


class ParseError(SymtestError):
    """A cell in a data file could not be parsed."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class RangeError(SymtestError):
    """A parsed value lies outside its admissible range."""


class IoError(SymtestError):
    """Reading or writing a report failed."""
