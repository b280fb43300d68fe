"""
Shared exception base
Every error raised by the analyzer derives from WcetError
"""


class WcetError(Exception):
    """Base class for analyzer errors."""


class PreconditionError(WcetError):
    """An operation was called outside its contract."""
