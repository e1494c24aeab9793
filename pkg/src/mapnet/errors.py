"""errors"""

from __future__ import annotations


class MapnetError(Exception):
    """
    Base class of every error raised by the package. `exit_code` is the process exit status used by the cli.
    """

    exit_code: int = 1


class ConfigError(MapnetError):
    """Invalid configuration value or file"""


class ScenarioError(MapnetError):
    """Scenario cannot be built from the given configuration"""


class ChannelError(MapnetError):
    """Invalid link geometry, e.g. coincident transmitter and receiver"""


class InactiveMapError(MapnetError):
    """Operation requires an active (deployed) MAP"""


class ShapeMismatchError(MapnetError):
    """Observation or weight vector does not match the policy architecture"""


class FederationError(MapnetError):
    """Weight vectors cannot be aggregated"""


class PolicyNotFoundError(MapnetError, KeyError):
    """Registry has no policy for the requested regime entry"""


class CheckpointError(MapnetError):
    """Checkpoint file or registry directory is missing or corrupt"""

    exit_code = 3


class TrainingDivergedError(MapnetError):
    """Training produced a non finite loss"""

    exit_code = 4


class ConstraintViolationError(MapnetError):
    """A slot violated one of the network constraints"""

    exit_code = 5


class EmptyRecordError(MapnetError):
    """Nothing to summarize or plot"""

    exit_code = 6


class RecordFormatError(MapnetError):
    """Record file is not a valid record stream"""

    exit_code = 6


class WorkerExitedError(MapnetError):
    """A worker process died without reporting a result"""


class EpisodeFailedError(MapnetError):
    """An episode raised an unexpected exception inside a worker"""
