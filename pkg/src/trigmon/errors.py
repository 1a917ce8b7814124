class ConfigError(ValueError):
    """Invalid configuration. ``fields`` names the offending settings."""

    def __init__(self, message, fields=()):
        super().__init__(message)
        self.fields = tuple(fields)
