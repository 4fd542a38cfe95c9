# src/markov_game_lab/utils/exceptions.py
from typing import Any, Optional, Tuple


class GameValidationError(ValueError):
    """Raised when a game, policy or family violates a structural invariant."""

    def __init__(self, message: str, index: Optional[Tuple[int, ...]] = None):
        self.index = index
        if index is not None:
            message = f"{message} at index {index}"
        super().__init__(message)


class SolverError(RuntimeError):
    """The matrix-game LP failed to converge."""

    def __init__(
        self,
        message: str,
        iterations: int,
        location: Optional[Tuple[int, int]] = None,
    ):
        self.iterations = iterations
        self.location = location
        self.base_message = message
        text = f"{message} (iterations={iterations})"
        if location is not None:
            text += f" at (h={location[0]}, x={location[1]})"
        super().__init__(text)

    def at(self, h: int, x: int) -> "SolverError":
        return SolverError(self.base_message, self.iterations, (h, x))


class ConfigurationError(ValueError):
    pass


class TheoryViolation(RuntimeError):
    """An event the learning guarantees rule out (e.g. an empty version space)."""


class AuditFailure(AssertionError):
    def __init__(self, message: str, terms: Any = None):
        self.terms = terms
        if terms is not None:
            message = f"{message}\n{terms}"
        super().__init__(message)


class SizeCapExceeded(ValueError):
    def __init__(self, size: int, cap: int):
        self.size = size
        self.cap = cap
        super().__init__(
            f"Exact search refused: {size} measures exceed the cap of {cap}."
        )


class SweepFailure(RuntimeError):
    def __init__(self, failed: list[int], total: int):
        self.failed = failed
        super().__init__(f"{len(failed)} of {total} seeds failed: {failed}")
