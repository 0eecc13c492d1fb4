"""Exception hierarchy.  ``exit_code`` is what the CLI returns for each class."""


class ShadowLabError(Exception):
    exit_code = 1


class InputError(ShadowLabError, ValueError):
    """Malformed argument or scene: non-unit direction, bad JSON, mode/space mismatch."""

    exit_code = 3


class DegenerateBodyError(InputError):
    """Body with empty interior or unbounded polytope."""


class InconclusiveDistanceError(ShadowLabError):
    """Iterative distance hit its evaluation cap; carries the bounds reached."""

    exit_code = 2

    def __init__(self, message, lower, upper):
        super().__init__(message)
        self.lower = lower
        self.upper = upper


class ConstructionError(ShadowLabError):
    exit_code = 4

    def __init__(self, message, trace=None, candidate=None):
        super().__init__(message)
        self.trace = trace
        self.candidate = candidate


class SearchFailedError(ConstructionError):
    """Configuration search exhausted its budget without a certified result."""


class EscapeNotFoundError(ShadowLabError):
    exit_code = 2


class ResourceError(ShadowLabError):
    """A net or cell budget would exceed the allowed size."""

    exit_code = 5

    def __init__(self, message, required_delta=None, estimated_size=None):
        super().__init__(message)
        self.required_delta = required_delta
        self.estimated_size = estimated_size
