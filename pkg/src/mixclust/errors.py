"""Exception hierarchy. The CLI maps each class to its own exit code."""


class MixclustError(Exception):
    exit_code = 1


class SchemaError(MixclustError, ValueError):
    """Scene or config file does not match the expected schema."""
    exit_code = 3


class GeometryError(MixclustError, ValueError):
    """Invalid surface or scene definition (including separation violations)."""
    exit_code = 4


class SamplingError(MixclustError, RuntimeError):
    """Rejection sampling acceptance rate fell below the floor."""
    exit_code = 5


class GraphError(MixclustError, ValueError):
    """Invalid graph-construction input (scale, kernel, neighbour count, duplicates)."""
    exit_code = 6


class SpectralError(MixclustError, RuntimeError):
    """Isolated vertices, degenerate embedding rows or eigensolver failure."""
    exit_code = 7


class EvaluationError(MixclustError, ValueError):
    """Bad input to a scorer, threshold calculator or oracle."""
    exit_code = 8
