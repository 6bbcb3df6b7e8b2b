"""Exception hierarchy shared by every module of the package."""


class BlackboardError(Exception):
    """Base class for all errors raised by this package."""


class BandwidthExceeded(BlackboardError):
    """A protocol emitted a message longer than its declared bandwidth."""


class OutOfRange(BlackboardError, ValueError):
    pass


class TooLarge(BlackboardError):
    """An exhaustive computation was requested beyond its size cap."""


class NotDisjoint(BlackboardError, ValueError):
    pass


class Overflow(BlackboardError):
    """Hard-distribution counts are too large to represent or materialize."""


class UnknownVariable(BlackboardError, KeyError):
    pass


class ZeroProbabilityEvent(BlackboardError):
    pass


class SupportMismatch(BlackboardError, ValueError):
    pass


class LayoutRequired(BlackboardError):
    pass


class NondeterministicProtocol(BlackboardError):
    pass


class ConfigError(BlackboardError, ValueError):
    pass
