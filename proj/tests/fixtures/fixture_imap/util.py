"""Small text helpers shared by the client modules."""


def ensure_text(value):
    """Return value as str, decoding bytes as UTF-8 when needed."""
    if isinstance(value, bytes):
        return value.decode("utf-8")
    return str(value)
