"""Exception hierarchy shared by all modules."""


class GossipBanditError(Exception):
    """Base class for every error raised by this package."""


class InvalidTopologyParams(GossipBanditError, ValueError):
    pass


class DisconnectedGraph(GossipBanditError, ValueError):
    pass


class InvalidProbability(GossipBanditError, ValueError):
    pass


class DimensionMismatch(GossipBanditError, ValueError):
    pass


class ParseError(GossipBanditError, ValueError):
    pass


class ValueOutOfRange(GossipBanditError, ValueError):
    pass


class IndexOutOfRange(GossipBanditError, IndexError):
    pass


class RewardOutOfRange(GossipBanditError, ValueError):
    pass


class EmptyActiveSet(GossipBanditError, RuntimeError):
    pass


class AlreadyStopped(GossipBanditError, RuntimeError):
    pass


class NotStopped(GossipBanditError, RuntimeError):
    pass


class DegenerateInput(GossipBanditError, ValueError):
    pass


class InvalidSpec(GossipBanditError, ValueError):
    pass
