"""Exception hierarchy shared by every layer of the simulator."""


class WSNError(Exception):
    """Base class for all simulator errors."""


class ConfigurationError(WSNError, ValueError):
    pass


class DomainError(WSNError, ValueError):
    """An argument outside the mathematical domain of an operation."""


class EncodingError(WSNError, ValueError):
    pass


class ProtocolError(WSNError):
    """A frame that violates the message protocol."""


class TransportClosed(WSNError):
    """Raised by a receive on an endpoint that has been shut down."""


class AnalysisError(WSNError, ValueError):
    pass


class SimulationError(WSNError, RuntimeError):
    pass
