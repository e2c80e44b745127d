"""Priority-based coordination of fixed-path robots at an intersection.

The package splits into focused modules:

* :mod:`rightofway.geometry` -- coordination-space collision regions,
  completions, membership and segment tests.
* :mod:`rightofway.priority` -- priority graphs, induced priorities, cycle
  obstruction checks, feasibility margins, and feasible-path construction.
* :mod:`rightofway.motion` -- robot limits, slot-stepped first/second-order
  flows, stop positions, and non-deterministic state boxes.
* :mod:`rightofway.control` -- priority-preserving control laws (velocity,
  acceleration, and information-space variants) and brake safety.
* :mod:`rightofway.controller` -- the intersection controller: admission
  policies, anti-starvation locking, and back-pressure phases.
* :mod:`rightofway.sim` -- scenario files, the slot-stepped simulator,
  traces, metrics, and the conservative collision checker.
* :mod:`rightofway.cli` -- the ``rightofway`` command-line tool.

The numeric core is implemented twice: a compiled extension and a pure
Python reference with bit-identical results (see :mod:`rightofway.kernels`).
"""

from .errors import (
    CycleBoundExceededError,
    InconsistentObservationError,
    InsufficientMarginError,
    InvalidControlError,
    InvalidCycleError,
    InvalidGeometryError,
    PathInfeasibleError,
    PriorityViolatedError,
    RightOfWayError,
    UndeterminedPriorityError,
    UnsupportedPrioritiesError,
)

__version__ = "0.1.0"

__all__ = [
    "CycleBoundExceededError",
    "InconsistentObservationError",
    "InsufficientMarginError",
    "InvalidControlError",
    "InvalidCycleError",
    "InvalidGeometryError",
    "PathInfeasibleError",
    "PriorityViolatedError",
    "RightOfWayError",
    "UndeterminedPriorityError",
    "UnsupportedPrioritiesError",
    "__version__",
]
