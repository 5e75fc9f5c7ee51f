"""Exception hierarchy shared by the library, the CLI and the tool scripts."""


class PolyrieszError(ValueError):
    """Base class for every error raised deliberately by polyriesz."""


class PolygonValidationError(PolyrieszError):
    """A vertex list violates the Polygon invariants.

    ``issues`` holds validation records shaped like
    ``{"severity", "rule", "location", "message"}``.
    """

    def __init__(self, message, issues=None):
        super().__init__(message)
        self.issues = list(issues or [])


class NotStarShapedError(PolygonValidationError):
    """The fan node does not see every edge from inside the polygon."""


class KernelCapabilityError(PolyrieszError):
    """Derivative requested from a kernel that does not provide it."""


class KernelSpecError(PolyrieszError):
    """Malformed kernel specification string."""


class QuadratureError(PolyrieszError):
    """Degree out of range, or a constructed rule failed its exactness test."""


class ConvergenceError(PolyrieszError):
    """An iterative procedure (solve, eigen-decomposition, sampling) failed."""


class DegeneratingIterateError(PolyrieszError):
    """The optimizer could not keep its iterate a simple polygon."""


class UsageError(PolyrieszError):
    """Invalid command-line usage."""


class PolygonFileError(PolyrieszError):
    """A polygon file is missing or not valid polygon JSON."""
