"""Exception types raised by the rankfield pipeline."""


class RankfieldError(Exception):
    """Base class for all rankfield errors."""


class DegenerateInput(RankfieldError):
    """Point set is affinely dependent (or too small) for triangulation."""


class DuplicatePoints(RankfieldError):
    """Two input points coincide exactly; deduplicate before triangulating."""


class TooLarge(RankfieldError):
    """Input exceeds the size bound of a brute-force routine."""


class GridMismatch(RankfieldError):
    """Operands live on different grids or homology dimensions."""


class EmptyInput(RankfieldError):
    """An operation requiring at least one element received none."""


class TooFewFunctions(RankfieldError):
    """Not enough sample functions for the requested decomposition."""


class ConditioningTimeout(RankfieldError):
    """Rejection sampling failed to hit the target count within the attempt cap."""


class ConfigError(RankfieldError):
    """A run configuration failed schema validation."""
