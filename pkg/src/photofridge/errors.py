"""Exception hierarchy shared by all modules."""


class FridgeError(Exception):
    """Base class for model and solver failures."""


class DomainError(FridgeError, ValueError):
    """An input lies outside the domain of a formula."""


class SpecError(FridgeError, ValueError):
    """A device parameterization violates one of its invariants."""


class MultipleSteadyStatesError(FridgeError):
    """The generator has more than one closed communicating class."""


class SolverError(FridgeError):
    """The steady-state solve produced an unusable probability vector."""


class SpecMismatchError(FridgeError, ValueError):
    """A steady state was paired with a device it was not computed for."""


class DivergenceError(FridgeError):
    """Entropy production diverges because a zero-temperature bath exchanges heat."""

    def __init__(self, bath, heat):
        self.bath = bath
        self.heat = heat
        super().__init__(f"bath {bath!r} is at T=0 but exchanges heat {heat:.6g}")


class BracketError(FridgeError, ValueError):
    """The residual does not change sign over the supplied bracket."""
