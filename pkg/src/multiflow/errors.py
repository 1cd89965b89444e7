"""Exception hierarchy.

The CLI maps these onto stable exit codes: ``CaseIOError`` -> 2,
``ParseError``/``ModelError`` -> 3, ``NumericalError`` -> 4.
"""


class MultiflowError(Exception):
    """Base class for all library errors."""


class CaseIOError(MultiflowError):
    pass


class ParseError(MultiflowError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ModelError(MultiflowError):
    pass


class DesignError(ModelError):
    """Invalid elliptical map supplied for the curve design."""

    def __init__(self, message, row=None):
        self.row = row
        super().__init__(message)


class NumericalError(MultiflowError):
    pass


class ConvergenceError(NumericalError):
    pass


class EmbeddingSingularError(NumericalError):
    pass


class DegenerateVoltageError(NumericalError):
    pass


class DegeneratePadeError(NumericalError):
    pass


class PoleEvaluationError(NumericalError):
    pass


class CorrectorFailure(NumericalError):
    pass


class PredictionError(NumericalError):
    pass


class StepFloorError(NumericalError):
    pass
