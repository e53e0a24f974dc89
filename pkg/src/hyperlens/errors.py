"""Cross-cutting exception types.

Stage- and algorithm-specific errors live next to the code that raises them
and subclass :class:`HyperlensError` so the CLI can map any pipeline failure
to a categorized exit code.
"""


class HyperlensError(Exception):
    """Base class for all errors raised by this package."""

    category = "error"


class ConfigError(HyperlensError):
    """Bad or inconsistent pipeline configuration."""

    category = "config"


class MissingArtifact(HyperlensError):
    """A stage was run before the stage that produces its input."""

    category = "missing-artifact"

    def __init__(self, path, hint=""):
        msg = f"required artifact not found: {path}"
        if hint:
            msg += f" ({hint})"
        super().__init__(msg)
        self.path = path


class KTooLarge(HyperlensError):
    """More clusters/parts requested than there are items."""

    category = "clustering"
