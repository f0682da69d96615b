"""Exception hierarchy shared by all qnnreg modules.

The CLI maps these onto exit codes: configuration/input problems exit
with 1, numerical failures with 2, conformance-check failures with 3.
"""


class QnnError(Exception):
    """Base class for all qnnreg errors."""


class ConfigurationError(QnnError):
    """Invalid configuration: bad wire index, unknown ansatz, bad fraction, ..."""


class SizeLimitError(ConfigurationError):
    """A deliberately bounded operation was asked to exceed its bound."""


class InputError(QnnError):
    """Invalid runtime input data (non-finite feature, length mismatch, ...)."""


class DegenerateInputError(InputError):
    """Input whose norm is undefined (all-zero amplitude vector)."""


class ParseError(InputError):
    """Malformed dataset or config file; message names row/column."""


class NumericalError(QnnError):
    """Non-finite value encountered during simulation or training."""
