"""Errors shared by the HTTP-facing clients."""


class TransportError(Exception):
    """Network-level failure: connection refused, timeout, reset."""


class ProviderError(Exception):
    """The provider answered with a non-2xx status."""

    def __init__(self, status: int, excerpt: str):
        super().__init__(f"provider returned HTTP {status}: {excerpt}")
        self.status = status
        self.excerpt = excerpt


class ParseError(Exception):
    """The provider answered 2xx but the body has an unexpected shape."""
