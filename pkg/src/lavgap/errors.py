"""Exception hierarchy shared by all modules."""


class LavgapError(Exception):
    """Base class for every error raised by the package."""


class ContainmentError(LavgapError):
    """A region is not compactly contained in the region it must sit inside."""


class OrderError(LavgapError):
    """A derivative order exceeds the smoothness of a weight."""


class CatalogError(LavgapError):
    """Unknown catalog name or malformed catalog parameter."""


class ParameterError(LavgapError):
    """A numeric parameter lies outside its admissible range."""


class HypothesisError(LavgapError):
    """The input violates a hypothesis the algorithm relies on."""


class ConfigError(LavgapError):
    """Invalid mollifier or experiment configuration."""


class DivergenceError(LavgapError):
    """The discrete solver produced non-finite values it could not recover from."""


class GateRefused(LavgapError):
    """The exponent condition for the requested run does not hold.

    Attributes
    ----------
    inequality : str
        Human readable form of the failing inequality.
    """

    def __init__(self, inequality: str):
        super().__init__(f"exponent gate refused: {inequality}")
        self.inequality = inequality
