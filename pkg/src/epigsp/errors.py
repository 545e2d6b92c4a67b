"""Exception hierarchy shared by every module."""


class EpigspError(Exception):
    """Base class for all package errors."""


class ConfigurationError(EpigspError, ValueError):
    """A configuration object violates its invariants."""


class ArgumentError(EpigspError, ValueError):
    """A call received an invalid argument (bad node id, shape mismatch, ...)."""


class WindowError(ArgumentError):
    """The requested time step does not leave room for a full window."""


class CapacityError(EpigspError, MemoryError):
    """A derived object would exceed the configured size cap."""


class IngestionError(EpigspError, ValueError):
    """Input data files are malformed or inconsistent."""


class IntegrationError(EpigspError, RuntimeError):
    """The ODE integrator could not proceed.

    ``time`` and ``state`` carry the last accepted point for diagnostics.
    """

    def __init__(self, message, time=None, state=None):
        super().__init__(message)
        self.time = time
        self.state = state


class StiffnessError(IntegrationError):
    """Adaptive step size dropped below the configured minimum."""


class IntegrityError(IntegrationError):
    """A compartment went negative beyond round-off."""
