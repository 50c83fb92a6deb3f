"""Exception types shared by all modules."""


class SLMChannelError(Exception):
    """Base class for errors raised by slmchannel."""


class ParameterError(SLMChannelError, ValueError):
    """A numeric parameter is outside its allowed range."""


class InvalidStateError(SLMChannelError, ValueError):
    """A matrix is not a valid density matrix (or Bloch vector)."""


class InvariantViolationError(SLMChannelError, ValueError):
    """A Kraus set is not trace preserving."""


class InvalidChannelError(SLMChannelError, ValueError):
    """A Choi matrix does not describe a CPTP map."""


class InsufficientDataError(SLMChannelError, ValueError):
    """Counts (or a matrix) carry no usable information."""
