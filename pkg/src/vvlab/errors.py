"""Exception hierarchy shared by all vvlab modules."""


class VVLabError(Exception):
    """Base class for every error raised by this package."""


# system models
class UnknownSystem(VVLabError, KeyError):
    pass


class NonRealSpectrum(VVLabError):
    pass


class EvaluationOutsideBox(VVLabError):
    pass


class HypothesisFailed(VVLabError):
    pass


# spectral
class ComplexEigenvalues(NonRealSpectrum):
    pass


class DegenerateSpectrum(VVLabError):
    pass


class ResonantDenominator(VVLabError):
    pass


# solver
class StateLeftBox(VVLabError):
    pass


class NonFiniteState(VVLabError):
    pass


# decomposition
class NewtonDivergence(VVLabError):
    pass


class DataTooLarge(VVLabError):
    pass


# functionals
class GapViolated(VVLabError):
    pass


class ViscosityFloorViolated(VVLabError):
    pass


class GridTooLarge(VVLabError):
    pass


# travelling waves
class NoFlux(VVLabError):
    pass


class NoConnection(VVLabError):
    pass


# experiments
class InsufficientWindow(VVLabError):
    pass


class GridTooCoarse(VVLabError):
    pass


class ConfigError(VVLabError, ValueError):
    pass
