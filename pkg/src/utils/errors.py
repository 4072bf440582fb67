"""
Exception types raised by the dispatching solver
"""


class TrainPathsError(Exception):
    """Base class for all solver errors"""


class ConfigError(TrainPathsError):
    """Invalid configuration or scenario values"""


class NetworkFormatError(TrainPathsError):
    """Network or scenario file does not match its schema"""


class NoRoute(TrainPathsError):
    """Target dispatching point is unreachable"""


class InvalidKinematics(TrainPathsError):
    """Non-positive speed, acceleration or deceleration"""


class NoProfile(TrainPathsError):
    """A service cannot be covered by speed-profiles"""


class DuplicatePath(TrainPathsError):
    """Train path inserted twice into the conflict graph"""


class IncidenceMismatch(TrainPathsError):
    """Clique store and master rows disagree"""


class StartFailure(TrainPathsError):
    """FCFS could not produce a conflict-free path"""

    def __init__(self, message: str, service: str = None, diagnostics: dict = None):
        super().__init__(message)
        self.service = service
        self.diagnostics = diagnostics or {}


class SolverError(TrainPathsError):
    """Malformed model or numerical breakdown inside the LP/MIP engine"""
