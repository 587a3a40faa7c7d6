"""Exception hierarchy shared by the solver, the readers and the CLI."""


class PfsnmError(Exception):
    """Base class for all package errors."""


class StructuralError(PfsnmError):
    """Shapes or block structure do not match, or A is not surjective."""


class DomainError(PfsnmError, ValueError):
    """A point lies outside the domain of a spectral function or barrier."""


class ParameterError(PfsnmError, ValueError):
    """Invalid algorithm parameter (mu <= 0, rho < 1, sigma outside (0, 1))."""


class NumericalError(PfsnmError):
    """Factorization breakdown or a merit radicand that is clearly negative."""


class ParseError(PfsnmError):
    """Malformed input file.

    ``line`` is the 1-based line number when known.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
