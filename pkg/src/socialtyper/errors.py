"""Shared exception base for data and format errors."""


class SocialTyperError(Exception):
    """Base class for all recoverable data/format errors in this package.

    The CLI maps any subclass to exit status 1; usage errors exit with 2.
    """
