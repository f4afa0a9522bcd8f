from __future__ import annotations


class NtcwlaError(Exception):
    """Base class for every error raised by this library."""


class ValidationError(NtcwlaError, ValueError):
    """Invalid input: configuration, file contents or violated preconditions."""


class LocalizationError(NtcwlaError):
    """A localization period could not produce an estimate."""
