"""Sample-based falsification of X-convexity and its generalizations.

Every check evaluates the combination ``delta * (r - t) + g(t)`` over a finite
sample plan and either returns a concrete witness or reports that none was
found.  A clean result is evidence, not proof.
"""

from .checker import (
    ALL_CLASSES,
    CONCAVE_CLASSES,
    CONVEX_CLASSES,
    ClassVerdict,
    Classification,
    Status,
    Tolerances,
    Witness,
    check_class,
    check_x_convex_set,
    classify,
    verify_witness,
)
from .geometry import DomainSet, Interval, SamplePlan
from .lang import GMap, ScalarFn, parse
from .problem import ProblemError, ProblemFile, run_problem

__version__ = "0.1.0"

__all__ = [
    "ALL_CLASSES",
    "CONCAVE_CLASSES",
    "CONVEX_CLASSES",
    "ClassVerdict",
    "Classification",
    "DomainSet",
    "GMap",
    "Interval",
    "ProblemError",
    "ProblemFile",
    "SamplePlan",
    "ScalarFn",
    "Status",
    "Tolerances",
    "Witness",
    "check_class",
    "check_x_convex_set",
    "classify",
    "parse",
    "run_problem",
    "verify_witness",
]
