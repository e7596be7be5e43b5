"""Exception types shared across the package."""


class VocalNavError(Exception):
    """Base class for all package errors."""


class AudioFormatError(VocalNavError):
    """Malformed or unsupported audio container."""


class TranscriptError(VocalNavError):
    """Invalid word-timed transcript."""


class BackendError(VocalNavError):
    """Language-model backend failure (transport or unparseable reply)."""

    def __init__(self, message: str, raw_reply: str | None = None):
        super().__init__(message)
        self.raw_reply = raw_reply


class UnmatchedBundleError(BackendError):
    """Mock backend saw a bundle no rule covers."""


class PlanError(VocalNavError):
    """Plan uses an unknown verb or a landmark verb without an argument."""


class EnvironmentError_(VocalNavError):
    """Invalid environment description or unreachable target."""


class ConfigError(VocalNavError):
    """Invalid configuration or corpus/manifest file."""
