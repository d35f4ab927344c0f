"""Exception hierarchy shared by the whole package."""


class UMTSVMError(Exception):
    """Base class for errors raised by this package."""


class ConfigurationError(UMTSVMError):
    """Bad user configuration: missing column, unknown flag value, ..."""


class ValidationError(UMTSVMError, ValueError):
    """Input data violates a structural requirement."""


class ParseError(UMTSVMError, ValueError):
    """A file could not be parsed."""


class NumericError(UMTSVMError, ArithmeticError):
    """A factorization or solve failed."""


class FormatError(UMTSVMError):
    """A saved model file is corrupted or has an unsupported version."""
