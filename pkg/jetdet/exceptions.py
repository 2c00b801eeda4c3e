"""
Exception types and exit-code handling for jetdet.
"""

import logging

logger = logging.getLogger("jetdet")

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_INCONCLUSIVE = 2


class JetDetError(Exception):
    """Base class for every error raised by the library."""

    exit_code = EXIT_INPUT_ERROR


class DimensionError(JetDetError):
    """Operands disagree on the number of variables or an index is out of range."""


class TruncationError(JetDetError):
    """Operands carry different truncation degrees."""


class DomainError(JetDetError):
    """An argument lies outside the domain of the operation (radius ≤ 0, constant term in a map, ...)."""


class ParseError(JetDetError):
    """Text or JSON input could not be read."""


class DegenerateInputError(JetDetError):
    """Constant germ, zero ideal, or another input excluded by the theorems."""


class ExponentialError(JetDetError):
    """The exponential of a derivation is not available in exact mode."""


class BandOverflowError(JetDetError):
    """A Fourier index left the band of a circle-ring jet."""

    def __init__(self, index: int, band: int):
        super().__init__(
            f"Fourier index {index} exceeds band {band}; rerun with a larger band"
        )
        self.index = index
        self.band = band


class PreconditionError(JetDetError):
    """A hypothesis of the determinacy theorems does not hold."""

    exit_code = EXIT_INCONCLUSIVE

    def __init__(self, inclusion: str, detail: str = ""):
        message = f"Precondition failed: {inclusion}"
        if detail:
            message += f" ({detail})"
        super().__init__(message)
        self.inclusion = inclusion


class CertificateError(JetDetError):
    """A serialized certificate is malformed or fails verification."""


def handle_error(exc: Exception, debug: bool = False) -> int:
    """Log an exception raised by a command and return its exit code."""
    if isinstance(exc, PreconditionError):
        logger.warning(f"{exc}")
        return exc.exit_code
    if isinstance(exc, JetDetError):
        logger.error(f"{type(exc).__name__}: {exc}")
        return exc.exit_code
    logger.error(f"Unhandled exception: {str(exc)}", exc_info=debug)
    return EXIT_INPUT_ERROR
