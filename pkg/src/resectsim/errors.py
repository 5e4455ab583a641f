"""Exception hierarchy. The CLI maps these onto exit codes."""


class ResectSimError(Exception):
    """Base class for all resectsim errors."""


class InputDataError(ResectSimError):
    """Invalid input data (bad file, bad mask, grid problems). Exit code 1."""


class GridMismatchError(InputDataError):
    """Two volumes do not share a grid."""


class ConfigError(ResectSimError):
    """Invalid configuration value; the message names the offending key."""


class SimulationError(ResectSimError):
    """The simulation itself failed at runtime. Exit code 2."""
