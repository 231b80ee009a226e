"""Exception and warning types raised across the package."""


class OverdictError(Exception):
    """Base class for all package errors."""

    #: short machine-readable tag used in report rows
    status = "Error"


class InfeasibleIncoherence(OverdictError):
    status = "InfeasibleIncoherence"

    def __init__(self, message, best_mu0=None, best_mu1=None):
        super().__init__(message)
        self.best_mu0 = best_mu0
        self.best_mu1 = best_mu1


class DimensionMismatch(OverdictError, ValueError):
    status = "DimensionMismatch"


class TooLargeToEnumerate(OverdictError):
    status = "TooLargeToEnumerate"


class InvalidRegime(OverdictError):
    status = "InvalidRegime"

    def __init__(self, message, max_sparsity=None):
        super().__init__(message)
        self.max_sparsity = max_sparsity


class NotAnEdge(OverdictError, KeyError):
    status = "NotAnEdge"

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class ClusterTooSmall(OverdictError):
    status = "ClusterTooSmall"


class EmptyCluster(OverdictError):
    status = "EmptyCluster"


class NoAtomsRecovered(OverdictError):
    status = "NoAtomsRecovered"


class IllConditionedSupport(OverdictError):
    status = "IllConditionedSupport"


class SingularGram(OverdictError):
    status = "SingularGram"


class RegimeNotApplicable(OverdictError):
    status = "RegimeNotApplicable"


class EmptySample(OverdictError):
    status = "EmptySample"


class ConfigError(OverdictError, ValueError):
    status = "ConfigError"


class DegenerateSpectrumWarning(RuntimeWarning):
    """Top two eigenvalues of a cluster matrix coincide; the direction is not identified."""
