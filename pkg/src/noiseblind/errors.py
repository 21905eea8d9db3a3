"""Exception types shared across the package."""


class NoiseBlindError(Exception):
    """Base class for all package-specific errors."""


class ParamError(NoiseBlindError, ValueError):
    """A parameter is outside its admissible range."""


class DimensionError(NoiseBlindError, ValueError):
    """Incompatible or inadmissible array dimensions."""


class SizeError(NoiseBlindError, ValueError):
    """An input exceeds the supported size budget of an exact routine."""


class MomentDiverges(NoiseBlindError, ValueError):
    """The requested absolute moment does not exist for this law."""


class RankDeficient(NoiseBlindError, ValueError):
    """A matrix fails a full-rank requirement at the stated tolerance."""


class EmptyCell(NoiseBlindError, ValueError):
    """A summary cell contains no converged records."""


class HarnessError(NoiseBlindError, RuntimeError):
    """An experiment run aborted (e.g. too many solver failures)."""
