"""Exception family for every failure the library reports.

Each error carries the operation it came from, a detail string and (when
wrapping) the original exception, so the CLI can print one clean line.
"""
from __future__ import annotations


class RobustThreshError(Exception):
    def __init__(self, operation: str, detail: str, original: Exception | None = None):
        self.operation = operation
        self.detail = detail
        self.original = original
        msg = f"{operation}: {detail}"
        if original is not None:
            msg += f" ({original})"
        super().__init__(msg)

    def user_message(self) -> str:
        return f"error [{self.operation}]: {self.detail}"


class DivergenceError(RobustThreshError):
    def __init__(self, operation: str, iteration: int, what: str = "iterate"):
        self.iteration = iteration
        super().__init__(
            operation,
            f"non-finite {what} at iteration {iteration}; try a smaller --eta",
        )


class FitConfigError(RobustThreshError):
    pass


class SingularSystemError(RobustThreshError):
    pass


class SingularCovarianceError(RobustThreshError):
    def __init__(self, operation: str, lambda_min: float):
        self.lambda_min = lambda_min
        super().__init__(
            operation,
            f"sample second-moment matrix is singular (lambda_min={lambda_min:.3g}); "
            "use more samples than dimensions",
        )


class GeneratorError(RobustThreshError):
    def __init__(self, operation: str, detail: str, eigenvalue: float | None = None):
        self.eigenvalue = eigenvalue
        super().__init__(operation, detail)

    @classmethod
    def not_psd(cls, eigenvalue: float) -> GeneratorError:
        return cls("generate_clean", f"sigma is not PSD: eigenvalue {eigenvalue:.6g}", eigenvalue)


class AdversaryError(RobustThreshError):
    pass


class DatasetFormatError(RobustThreshError):
    pass


class ThresholdRangeError(RobustThreshError):
    pass


class LabParameterError(RobustThreshError):
    pass


class KeyStepCardinalityError(RobustThreshError):
    def __init__(self, left_count: int, right_count: int):
        self.left_count = left_count
        self.right_count = right_count
        super().__init__(
            "key_step",
            f"|S & Q| = {left_count} but |P - S| = {right_count}; "
            "eps_alg must match the true corruption rate",
        )


class SweepTrialError(RobustThreshError):
    def __init__(self, axis_value: float, trial: int, original: Exception):
        self.axis_value = axis_value
        self.trial = trial
        super().__init__("sweep", f"trial {trial} at axis value {axis_value:g} failed", original)

    def user_message(self) -> str:
        inner = self.original.user_message() if isinstance(self.original, RobustThreshError) else str(self.original)
        return f"error [sweep] axis={self.axis_value:g} trial={self.trial}: {inner}"


class ReportIOError(RobustThreshError):
    def __init__(self, path: str, original: Exception):
        self.path = path
        super().__init__("io", f"cannot write {path}", original)
