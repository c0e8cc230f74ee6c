"""Exception hierarchy.

Two families matter to callers: :class:`ConfigError` (bad parameters, bad
files; the CLI maps it to exit code 2) and :class:`ProtocolError` (something
went wrong while the parties were running; exit code 3).
"""

from __future__ import annotations


class PdteError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(PdteError, ValueError):
    """Invalid parameters or inputs detected before any protocol runs."""


class ProtocolError(PdteError, RuntimeError):
    """Failure during a two-party run."""


# channel
class ChannelClosed(ProtocolError):
    pass


class DeliveryError(ProtocolError):
    """A receive found no delivered message, or the wrong one."""


# sharing
class WidthMismatch(ConfigError):
    pass


class ModulusMismatch(ConfigError):
    pass


# gmw
class ParseError(ConfigError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class TopologyError(ConfigError):
    pass


# correlations
class CorrelationExhausted(ProtocolError):
    pass


class TriplesExhausted(CorrelationExhausted):
    pass


class OtExhausted(CorrelationExhausted):
    pass


# conv
class NonPowerOfTwoModulus(ConfigError):
    pass


class BmtInvalid(ProtocolError):
    pass


class NonInvertibleGamma(ProtocolError):
    pass


# dealer
class MaskOverflow(ConfigError):
    pass


class CorrelationFileError(ConfigError):
    pass


# dpf / sos
class IndexOutOfRange(ConfigError, IndexError):
    pass


# paillier
class PlaintextOutOfRange(ConfigError):
    pass


class KeyMismatch(ConfigError):
    pass


# prf
class IndexWidthOverflow(ConfigError):
    pass


# sos / pdte
class ConfigInvalid(ConfigError):
    pass


class LayoutMismatch(ConfigError):
    pass


class TreeNotComplete(ConfigError):
    pass


# tree
class InvalidTree(ConfigError):
    pass


class UnsupportedQ(ConfigError):
    pass


# cli
class SpecInvalid(ConfigError):
    pass
