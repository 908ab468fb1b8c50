"""Exception hierarchy shared by the library and the command-line driver."""


class PmtmError(Exception):
    """Base class for all errors raised by this package."""


class InputError(PmtmError, ValueError):
    """Invalid parameters or malformed input data (CLI exit code 1)."""


class DegenerateTaperError(InputError):
    pass


class NumericalError(PmtmError, ArithmeticError):
    """A numerical routine failed to produce a valid result (CLI exit code 2)."""


class InfeasiblePointError(NumericalError):
    """A latent vector puts some rate outside the open interval (0, 1)."""


class DegenerateOffsetError(NumericalError):
    pass
