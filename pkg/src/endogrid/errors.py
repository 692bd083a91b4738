"""Error taxonomy: configuration errors vs scheme-capability errors."""


class ConfigError(ValueError):
    """Invalid configuration detected before any simulation work."""


class UnsupportedSchemeError(ConfigError):
    """A scheme was asked to do something outside its contract."""
