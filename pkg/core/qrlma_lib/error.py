from typing import List, Optional, Sequence


class QrlmaError(Exception):
    """Base error of the quasi-reaction toolkit. `exit_code` is what the CLI exits with."""

    exit_code: int = 1


class InvalidInputError(QrlmaError):
    exit_code = 1


class DimensionError(InvalidInputError):
    pass


class SpecFormatError(InvalidInputError):
    def __init__(
        self, message: str, line: Optional[int] = None, column: Optional[int] = None
    ):
        self.line = line
        self.column = column
        if line is not None and column is not None:
            message = f"{message} (line {line}, column {column})"
        elif line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)


class DataFormatError(SpecFormatError):
    pass


class PresetNotFoundError(InvalidInputError):
    def __init__(self, name: str, available: Sequence[str]):
        self.name = name
        self.available = list(available)
        super().__init__(
            f"Unknown preset '{name}'. Available presets: {', '.join(self.available)}"
        )


class TrajectoryTooShortError(InvalidInputError):
    def __init__(self, required: int, available: int):
        self.required = required
        self.available = available
        super().__init__(
            f"Trajectory has {available} events, subsampling requires at least {required}"
        )


class InactiveDesignError(InvalidInputError):
    def __init__(self, labels: List[str]):
        self.labels = labels
        super().__init__(
            f"Reactions never active in the data: {', '.join(labels)}"
        )


class NumericalError(QrlmaError):
    exit_code = 2


class NonFiniteInputError(NumericalError):
    pass


class PredictionOverflowError(NumericalError):
    def __init__(self, norm: float):
        self.norm = norm
        super().__init__(
            f"Prediction overflowed: matrix exponential of s*P with 1-norm {norm:.6g}"
        )


class SingularMatrixError(NumericalError):
    def __init__(self, condition: float):
        self.condition = condition
        super().__init__(f"Matrix is numerically singular (condition {condition:.3e})")


class IntegrationDivergenceError(NumericalError):
    def __init__(self, step: int, method: str):
        self.step = step
        self.method = method
        super().__init__(f"{method} integration diverged at step {step}")


class LineSearchError(NumericalError):
    pass


class NonIdentifiabilityWarning(UserWarning):
    pass
