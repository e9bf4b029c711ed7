"""CTMC models of load-altering attacks on a small power grid."""

from .ctmc import CLASSIFICATION_LABELS, Ctmc, Distribution, new_ctmc
from .errors import (
    BadHeader,
    DuplicateClass,
    DuplicateHour,
    DuplicateTransition,
    GridlockError,
    HourOutOfRange,
    IndexOutOfRange,
    InputFileError,
    InsufficientCapacity,
    MalformedDuration,
    MissingHour,
    MissingSection,
    NegativeTime,
    NonConvergence,
    NonPositiveDemand,
    NonPositiveRate,
    PriorityMismatch,
    ScenarioSyntaxError,
    SelfLoop,
    StateSpaceLimitExceeded,
    UnknownKey,
    UnknownLabel,
)

__version__ = "0.1.0"

__all__ = [
    "CLASSIFICATION_LABELS",
    "Ctmc",
    "Distribution",
    "new_ctmc",
    "GridlockError",
    "IndexOutOfRange",
    "NonPositiveRate",
    "DuplicateTransition",
    "SelfLoop",
    "NegativeTime",
    "NonConvergence",
    "UnknownLabel",
    "InsufficientCapacity",
    "StateSpaceLimitExceeded",
    "InputFileError",
    "MalformedDuration",
    "ScenarioSyntaxError",
    "MissingSection",
    "UnknownKey",
    "DuplicateClass",
    "PriorityMismatch",
    "BadHeader",
    "MissingHour",
    "DuplicateHour",
    "HourOutOfRange",
    "NonPositiveDemand",
    "__version__",
]
