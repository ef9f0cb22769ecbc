"""Exception types raised across the package."""


class NonlocalityError(ValueError):
    """Base class for all package errors."""


class DimMismatch(NonlocalityError):
    pass


class NotSelfAdjoint(NonlocalityError):
    pass


class NotOrthonormal(NonlocalityError):
    pass


class NotCommuting(NonlocalityError):
    pass


class DegenerateSpectrum(NonlocalityError):
    pass


class TooLarge(NonlocalityError):
    pass


class OffLattice(NonlocalityError):
    pass


class IncommensurateParams(NonlocalityError):
    pass


class NearNode(NonlocalityError):
    """The wave function is too close to zero for the velocity field to be trusted."""


class StepUnderflow(NonlocalityError):
    """Step halving near a node exceeded the allowed depth."""


class HorizonTooShort(NonlocalityError):
    pass


class DegenerateInitial(NonlocalityError):
    """Initial data sits on the measure-zero set where the sign prediction is undefined."""
