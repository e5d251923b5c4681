"""Exception types raised by the solver stack."""


class SBFEMError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(SBFEMError, ValueError):
    """Invalid study configuration or problem definition."""


class SpectralError(SBFEMError):
    """The mass/stiffness pencil could not be decomposed.

    Raised when the mass block is not positive definite (Cholesky failure),
    when the pencil has a clearly negative eigenvalue, or when the QL
    iteration does not converge.
    """


class ResonanceError(SBFEMError):
    """The particular-solution system ``((alpha+2)^2 A - B) phi = f`` is singular.

    Happens when ``(alpha + 2)**2`` coincides with an eigenvalue of the pencil
    ``B phi = lambda^2 A phi``.
    """

    def __init__(self, message, exponent=None, eigenvalue=None):
        super().__init__(message)
        self.exponent = exponent
        self.eigenvalue = eigenvalue
