"""Error taxonomy shared across the library.

Each error maps a well-defined failure of a precondition or runtime check;
the CLI translates configuration and usage errors into exit code 2 and
failed safety or verification properties into exit code 1.
"""


class RightOfWayError(Exception):
    """Base class for all library errors."""


class InvalidGeometryError(RightOfWayError):
    """Degenerate or inconsistent path/section geometry."""


class ScenarioError(RightOfWayError):
    """A scenario file violates the schema; names the offending field."""


class PathInfeasibleError(RightOfWayError):
    """A coordination-space path meets a collision region."""


class UndeterminedPriorityError(RightOfWayError):
    """A path leaves the relative order of a conflicting pair undecided."""


class InvalidCycleError(RightOfWayError):
    """A vertex sequence is not a cycle of the given graph/sections."""


class CycleBoundExceededError(RightOfWayError):
    """Cycle enumeration exceeded the supported bound."""


class InsufficientMarginError(RightOfWayError):
    """A construction needs more free margin than the graph provides."""


class InvalidControlError(RightOfWayError):
    """A command or disturbance lies outside the robot's limits."""


class InconsistentObservationError(RightOfWayError):
    """An observation box does not intersect the propagated state box."""


class UnsupportedPrioritiesError(RightOfWayError):
    """A control law cannot serve the given priority graph."""


class PriorityViolatedError(RightOfWayError):
    """The configuration already lies inside a forbidden completion."""


class SimulationBreach(RightOfWayError):
    """A safety invariant failed during a simulation run.

    Raised when the conservative collision check, the priority-violation
    check, or a box-consistency check fires mid-run.  Carries the metrics
    accumulated so far and the tail of the trace for diagnosis.
    """

    def __init__(self, message: str, metrics=None, tail=()):
        super().__init__(message)
        self.metrics = metrics
        self.tail = tuple(tail)

    def __str__(self):
        base = super().__str__()
        if not self.tail:
            return base
        return base + "\ntrace tail:\n" + "\n".join(self.tail)
