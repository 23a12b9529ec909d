"""Exceptions shared across modules."""


class ResourceError(RuntimeError):
    """A computation would exceed a configured memory or size limit.

    The message carries a remediation hint (a larger budget or box radius).
    """
