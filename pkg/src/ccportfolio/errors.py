"""Exception hierarchy shared by every module."""


class PortfolioError(Exception):
    """Base class for all package errors."""


class InputError(PortfolioError, ValueError):
    """Bad user-supplied data (maps to CLI exit code 2)."""


class MalformedCsv(InputError):
    pass


class NonPositivePrice(InputError):
    pass


class DuplicateTimestamp(InputError):
    pass


class TooFewRows(InputError):
    pass


class EmptyReturns(InputError):
    pass


class SchemaError(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class LengthMismatch(InputError):
    pass


class UnsortedTaus(InputError):
    pass


class TooManyAssets(InputError):
    pass


class OutOfDomain(PortfolioError, ValueError):
    pass


class DegenerateCoefficients(PortfolioError, ArithmeticError):
    """Partial-fraction hypoexponential formula is numerically unusable."""


class ConfigInvalid(PortfolioError, ValueError):
    pass
