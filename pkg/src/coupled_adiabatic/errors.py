"""Exception and warning types raised across the package."""


class CoupledAdiabaticError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(CoupledAdiabaticError, ValueError):
    pass


class NonHermitian(CoupledAdiabaticError, ValueError):
    pass


class NonPhysical(CoupledAdiabaticError, ValueError):
    """A density matrix or state violates trace, norm or positivity."""


# The dynamics module documents this name for rejected initial states.
NonPhysicalState = NonPhysical


class InvalidParameter(CoupledAdiabaticError, ValueError):
    pass


class UnsupportedModel(CoupledAdiabaticError, ValueError):
    pass


class DegenerateLabeling(CoupledAdiabaticError, RuntimeError):
    pass


class DegenerateGap(CoupledAdiabaticError, ArithmeticError):
    """Two coupled levels are closer than the degeneracy tolerance."""


class FrameMismatch(CoupledAdiabaticError, ValueError):
    pass


class InsufficientSamples(CoupledAdiabaticError, ValueError):
    pass


class StepTooLarge(CoupledAdiabaticError, ArithmeticError):
    """Per-step norm drift exceeded the integrator guard.

    ``suggested_n_steps`` is a step count expected to pass the guard.
    """

    def __init__(self, message: str, suggested_n_steps: int):
        super().__init__(message)
        self.suggested_n_steps = suggested_n_steps


class NotCyclicWarning(UserWarning):
    """|<psi(0)|psi(T)>| is too small for its argument to be well conditioned."""


class LabelAmbiguityWarning(UserWarning):
    pass
