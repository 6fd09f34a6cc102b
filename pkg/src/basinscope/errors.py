"""Exception types shared across basinscope."""


class BasinscopeError(Exception):
    pass


class NonConvergence(BasinscopeError):
    """Root finder ran out of sweeps. ``best`` holds the best-so-far RootSet."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class Indeterminate(BasinscopeError):
    """0/0 that survived every derivative level of the deflation."""


class UndefinedAtSixteen(BasinscopeError):
    pass


class NoFreeCritical(BasinscopeError):
    pass


class DerivativeZero(BasinscopeError):
    pass


class DenominatorZero(BasinscopeError):
    pass


class DegreeOverflow(BasinscopeError):
    pass


class RenderCancelled(BasinscopeError):
    pass
