"""Exception hierarchy shared by all modules."""


class DispersionLabError(Exception):
    """Base class for every error raised by the package."""


class ChannelError(DispersionLabError, ValueError):
    """Invalid channel matrix."""


class NonStochasticRow(ChannelError):
    pass


class NegativeEntry(ChannelError):
    pass


class AllZeroColumn(ChannelError):
    pass


class NegativeProbability(ChannelError):
    """A very-noisy family was evaluated at a zeta that leaves the simplex."""


class NoConvergence(DispersionLabError, RuntimeError):
    pass


class ZeroOutputProbability(DispersionLabError, ValueError):
    pass


class EmptySupport(DispersionLabError, RuntimeError):
    pass


class InfeasiblePolytope(DispersionLabError, RuntimeError):
    pass


class DomainError(DispersionLabError, ValueError):
    """Argument outside the domain of a closed-form expression."""


class HorizonExceeded(DispersionLabError, ValueError):
    pass


class IncompatibleController(DispersionLabError, ValueError):
    pass


class NotFound(DispersionLabError, RuntimeError):
    pass


class NotSimpleDispersion(DispersionLabError, ValueError):
    pass


class VacuousBound(DispersionLabError, ValueError):
    pass


class NonpositiveTime(DispersionLabError, ValueError):
    pass
