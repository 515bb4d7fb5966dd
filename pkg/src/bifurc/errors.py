"""Exception types shared across the package."""


class BifurcError(Exception):
    """Base class for all package-specific errors."""


class InvalidParams(BifurcError):
    """A model or sweep parameter is out of its valid range."""


class DegenerateGraph(BifurcError):
    """Graph generation left fewer than two usable nodes."""


class NotSymmetric(BifurcError):
    """Input matrix is not symmetric within tolerance."""


class NoConvergence(BifurcError):
    """An iterative numerical routine exhausted its budget."""


class NonFinite(BifurcError):
    """A NaN or infinity appeared where finite values are required."""


class IllConditionedFit(BifurcError):
    """Least-squares filter fit is rank deficient."""


class NonSimpleMode(BifurcError):
    """The targeted eigenvalue is degenerate; mode-resolved theory refuses."""


class UnsupportedActivation(BifurcError):
    """Activation lacks the Taylor structure the requested formula needs."""


class MultiModeRegime(BifurcError):
    """More than one mode is destabilized; single-mode selection is ill-posed."""


class TooLarge(BifurcError):
    """Problem size exceeds the limit for a brute-force check."""


class ZeroMatrix(BifurcError):
    """Operation requires a nonzero matrix."""


class BranchHop(BifurcError):
    """Continuation jumped between symmetry-related fixed-point branches."""


class SubcriticalInput(BifurcError):
    """Coupling is below onset where a supercritical quantity was requested."""


class SupercriticalInput(BifurcError):
    """Coupling is above onset where a subcritical quantity was requested."""


class ConfigError(BifurcError):
    """Command-line or run configuration does not validate."""
