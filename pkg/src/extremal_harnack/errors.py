"""Exception and warning classes shared across the package."""


class EvaluationDomainError(ValueError):
    """A nonlinearity could not be evaluated at a sample point."""


class QuadratureFailure(RuntimeError):
    """Adaptive quadrature exhausted its evaluation budget."""


class DomainError(ValueError):
    """Parameters fall outside the admissible range of a construction."""


class NotFound(LookupError):
    """A sweep finished without finding an admissible value."""


class MonotoneWarning(UserWarning):
    """Pass/fail outcomes of a sweep were not monotone."""


class CflViolation(RuntimeError):
    """Time step too large for the explicit scheme to be monotone."""


class NonFiniteValue(FloatingPointError):
    """The discrete solution left the finite range."""


class DegenerateBase(ValueError):
    """Probe base value is (numerically) zero."""


class NoAdmissibleBase(ValueError):
    """No base point admits the geometry required by a probe."""


class GridTooCoarse(ValueError):
    """A probed set is resolved by fewer than three grid cells on some axis."""


class ChainEscapesDomain(ValueError):
    """The global Harnack chain left the region where the field is defined."""
