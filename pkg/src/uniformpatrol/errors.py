"""Exception hierarchy shared by the solver modules."""


class PatrolError(Exception):
    """Base class for all errors raised by uniformpatrol."""


class InvalidSize(PatrolError, ValueError):
    pass


class InvalidParams(PatrolError, ValueError):
    pass


class InvalidDuration(PatrolError, ValueError):
    pass


class AwayChainAbsorbed(PatrolError):
    """The patroller returns to the attack node with certainty.

    Any larger delay can never be observed by the attacker.
    """

    def __init__(self, t, return_prob):
        super().__init__(
            f"away chain absorbed at t={t} (return probability {return_prob:.17g})"
        )
        self.t = t
        self.return_prob = return_prob


class UnreachableDelay(PatrolError):
    def __init__(self, delay, absorbed_at):
        super().__init__(
            f"delay {delay} is unreachable: away chain absorbed at t={absorbed_at}"
        )
        self.delay = delay
        self.absorbed_at = absorbed_at


class NoConvergence(PatrolError):
    def __init__(self, iterations, residual):
        super().__init__(
            f"no convergence after {iterations} iterations (residual {residual:.3e})"
        )
        self.iterations = iterations
        self.residual = residual
