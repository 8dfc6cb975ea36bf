"""Error taxonomy shared across the library and the CLI.

Domain errors on bad scalar arguments stay plain ValueErrors.  The three
classes here exist because the CLI maps them to distinct exit codes and
because callers may want to catch a budget failure without also catching
genuine bugs.
"""


class ConfigError(ValueError):
    """A config document or experiment description is malformed."""


class CapacityError(RuntimeError):
    """A requested computation exceeds an explicit term or trial budget."""


class AccuracyError(RuntimeError):
    """A requested tolerance was not reached; carries the achieved bound."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved
