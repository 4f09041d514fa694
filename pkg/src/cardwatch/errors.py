"""Exception types shared across the toolkit."""

from __future__ import annotations


class CardwatchError(Exception):
    """Base class for all toolkit errors."""


class NetworkError(CardwatchError):
    """DNS/connect/TLS/timeout failure during a fetch.

    Carries whatever partial redirect chain was recorded before the failure.
    """

    def __init__(self, message: str, partial_hops: list | None = None):
        super().__init__(message)
        self.partial_hops = partial_hops or []


class UnsupportedScheme(CardwatchError):
    """URL scheme is not http or https."""


class InvalidDomain(CardwatchError):
    """Malformed or empty hostname set supplied to app registration."""


class AuthFailed(CardwatchError):
    """AppID/AppSecret pair does not match any registration."""


class TokenExpired(CardwatchError):
    """Access token past its expiry at time of use."""


class UnknownApp(CardwatchError):
    """No registration exists for the given AppID."""


class InvalidScenario(CardwatchError):
    """Lab scenario violates a structural invariant."""


class PortBindError(CardwatchError):
    """Lab server could not bind a loopback port."""


class ConfigError(CardwatchError):
    """Configuration file is missing, malformed, or has unknown keys."""
