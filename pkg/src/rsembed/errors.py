"""Exception types raised across the package."""


class InvalidDims(ValueError):
    """System dimensions violate a structural requirement (e.g. M > K)."""


class InfeasibleDims(ValueError):
    """The surface has too few elements for the requested solver."""


class RankDeficient(ValueError):
    """A channel matrix is numerically rank deficient."""


class DegenerateGamma(ValueError):
    """gamma == 0: the closed-form density is an indeterminate 0/0."""


class ZeroNorm(ValueError):
    """||y||^2 == 0 passed to a closed-form density evaluation."""


class EigenvalueCollision(ValueError):
    """Perturbed spectra in the HCIZ oracle are not numerically distinct."""


class QuadratureNonConvergence(RuntimeError):
    pass


class FewerThanTwoPoints(ValueError):
    pass
