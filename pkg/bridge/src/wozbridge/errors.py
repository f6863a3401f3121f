class BridgeError(Exception):
    """Base for everything this package raises on purpose."""


class BridgeConfigError(BridgeError):
    pass


class BridgeDataError(BridgeError):
    """Training file missing, empty, or structurally wrong."""
