import logging
from typing import Callable, TypeVar

from pydantic import ValidationError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


class HarmonicityError(Exception):
    """Root of every error raised by the package."""


class InputError(HarmonicityError, ValueError):
    """The caller asked for something the operation cannot accept."""


class NumericalError(HarmonicityError, ArithmeticError):
    """A numerical procedure failed on valid input."""


class DomainError(InputError):
    pass


class SphereRuleError(InputError):
    pass


class AdmissibilityError(InputError):
    """A ball B(x; r) needed by an operation leaves the admissible region."""


class KernelError(InputError):
    pass


class CatalogError(InputError):
    pass


class ConfigError(InputError):
    pass


class SolverError(NumericalError):
    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class RateFitError(NumericalError):
    pass


E = TypeVar("E", bound=BaseException)
Handler = Callable[[BaseException], int]

_handlers: dict[type[BaseException], Handler] = {}


def exception_handler(exc_type: type[E]) -> Callable[[Handler], Handler]:
    """Register ``func`` as the exit-code handler for ``exc_type``."""

    def decorator(func: Handler) -> Handler:
        _handlers[exc_type] = func
        return func

    return decorator


def handle(exc: BaseException) -> int:
    """Dispatch ``exc`` to the most specific registered handler."""
    for klass in type(exc).__mro__:
        if klass in _handlers:
            return _handlers[klass](exc)
    raise exc


@exception_handler(InputError)
def input_error_handler(exc: BaseException) -> int:
    logger.error("invalid input: %s", exc)
    return EXIT_VALIDATION


@exception_handler(ValidationError)
def validation_exception_handler(exc: BaseException) -> int:
    logger.error("invalid configuration: %s", exc)
    return EXIT_VALIDATION


@exception_handler(NumericalError)
def numerical_error_handler(exc: BaseException) -> int:
    residual = getattr(exc, "residual", None)
    if residual is not None:
        logger.error("numerical failure: %s (residual %.3e)", exc, residual)
    else:
        logger.error("numerical failure: %s", exc)
    return EXIT_NUMERICAL
