"""Exception types shared across the package."""


class AvoidsetError(Exception):
    pass


class RingMismatch(AvoidsetError, TypeError):
    """Operands live in different rings or use different context parameters."""


class PrecisionMismatch(RingMismatch):
    pass


class DimensionMismatch(AvoidsetError, ValueError):
    pass


class NotInDomain(AvoidsetError, ValueError):
    """A point lies outside the compact domain of a landmark system."""


class Indeterminate(AvoidsetError):
    """An enclosure is too wide to decide a requested sign or bound."""


class BudgetExceeded(AvoidsetError):
    """An exhaustive search would exceed its configured budget."""


class PairLevelUnusable(AvoidsetError):
    pass


class UbiquityFailure(AvoidsetError):
    pass


class CertificationFailure(AvoidsetError):
    pass


class ConfigError(AvoidsetError, ValueError):
    pass


class SizingCapExceeded(AvoidsetError):
    """No admissible level was found below the hard cap."""

    def __init__(self, msg, binding=None):
        super().__init__(msg)
        self.binding = binding
