"""Exception types shared across the package."""


class ResyncError(Exception):
    """Base class for package-specific errors."""


class CorruptFileError(ResyncError):
    """A pattern or detections file failed header or payload validation."""


class InsufficientDetectionsError(ResyncError):
    """Too few detections survive preprocessing to attempt a recovery."""


class InfeasibleThresholdError(ResyncError):
    """Acceptance threshold is unreachable for the given error rate."""


class NoFeasibleSolutionError(ResyncError):
    """Parameter search found no operating point meeting all constraints."""


class InvalidScheduleError(ResyncError):
    """A resync block does not fit inside the requested repetition interval."""
