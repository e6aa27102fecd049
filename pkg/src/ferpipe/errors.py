"""Exception families shared across the pipeline.

Each family carries a distinct process exit code so CLI failures are
scriptable.
"""


class FerError(Exception):
    """Base class for all pipeline errors."""

    exit_code = 1


class InvalidInputError(FerError):
    """Bad argument, parameter out of range, or shape mismatch."""

    exit_code = 2


class ConfigError(InvalidInputError):
    """Pipeline configuration failed validation."""

    exit_code = 2


class IngestError(FerError):
    """Dataset manifest or referenced image is unusable."""

    exit_code = 3


class NormalizationFailure(FerError):
    """Face normalization could not locate the reference structure."""

    exit_code = 4


class TrainingFailure(FerError):
    """Boosting or cascade construction could not meet its targets."""

    exit_code = 5


class GraphConstructionError(FerError):
    """Neighborhood graph has no edges for the given parameter."""

    exit_code = 6


class DisconnectedGraphError(GraphConstructionError):
    """Neighborhood graph split into several components."""

    exit_code = 7

    def __init__(self, component_sizes):
        self.component_sizes = tuple(int(s) for s in component_sizes)
        super().__init__(
            "graph is disconnected; component sizes: "
            + ", ".join(str(s) for s in self.component_sizes)
        )


class NumericError(FerError):
    """Eigensolver failure or violated numeric sanity check."""

    exit_code = 8


class BundleError(FerError):
    """Model bundle failed checksum or version verification."""

    exit_code = 9
