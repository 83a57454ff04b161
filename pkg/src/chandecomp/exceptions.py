"""Exception types raised by chandecomp."""


class ValidationError(ValueError):
    """An input is not the mathematical object it claims to be (state, unitary, channel)."""


class NotCPError(ValidationError):
    """A Choi matrix has an eigenvalue below the positivity tolerance."""


class CapabilityError(ValueError):
    """The requested (family, n, m) combination has no ansatz implementation."""


class FileFormatError(ValueError):
    """A channel or result file could not be parsed; the message names the field."""
