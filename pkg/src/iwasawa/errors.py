"""Exception hierarchy shared by every layer of the package."""


class IwasawaError(Exception):
    """Base class for all errors raised by this package."""


class ParamMismatch(IwasawaError):
    """Operands live in truncated rings with different parameters."""


class PrecisionExhausted(IwasawaError):
    """The requested quantity is not determined at the working precision."""


class NotDivisible(IwasawaError):
    """Weierstrass division by a series with positive mu-invariant."""


class NotDistinguished(IwasawaError):
    pass


class NotSquare(IwasawaError):
    pass


class SizeExceeded(IwasawaError):
    """Matrix larger than the configured cofactor-expansion bound."""


class DimensionBudgetExceeded(IwasawaError):
    """An F_p matrix would exceed the configured dimension budget."""


class Unstable(IwasawaError):
    """A growth slope or intercept did not stabilise inside the window."""


class CongruenceViolation(IwasawaError):
    pass


class CorankMismatch(IwasawaError):
    pass
