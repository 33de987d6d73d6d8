class BridgeError(Exception):
    """Bad input to the bridge: unreadable checkpoint, unknown env, malformed request."""
