class ConfigError(ValueError):
    """Invalid run configuration (CLI exit code 2)."""


class ProtocolViolation(RuntimeError):
    """A round broke the interaction protocol or a learner's contract (CLI exit code 3)."""
