"""Exception hierarchy shared by every stage of the cascade."""


class DkfisError(Exception):
    """Base class; the CLI maps it to exit status 2."""


class MissingColumn(DkfisError):
    def __init__(self, name):
        super().__init__(f"missing column: {name}")
        self.name = name


class ParseError(DkfisError):
    def __init__(self, line, column, value=None):
        super().__init__(f"line {line}, column {column}: cannot parse {value!r}")
        self.line = line
        self.column = column


class EmptyDataset(DkfisError):
    pass


class InvariantViolation(DkfisError):
    def __init__(self, line, reason):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class TooFewRecords(DkfisError):
    def __init__(self, well_id):
        super().__init__(f"well {well_id!r} has fewer than 2 records")
        self.well_id = well_id


class InvalidSpec(DkfisError):
    pass


class DegenerateColumn(DkfisError):
    def __init__(self, name):
        super().__init__(f"degenerate (constant) column: {name}")
        self.name = name


class DimensionMismatch(DkfisError):
    pass


class SingleClassInput(DkfisError):
    pass


class NumericalFailure(DkfisError):
    pass


class TooFewPatterns(DkfisError):
    pass


class UndefinedMetric(DkfisError):
    def __init__(self, which, reason, partial=None):
        super().__init__(f"{which} undefined: {reason}")
        self.which = which
        self.reason = reason
        # metrics that were still computable, e.g. {"rmse": ..., "aem": ...}
        self.partial = dict(partial or {})


class VersionMismatch(DkfisError):
    pass


class StageError(DkfisError):
    """Wraps a component failure with the pipeline stage that raised it."""

    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause


class NonConvergence(UserWarning):
    """Training hit its iteration cap; the returned model is still usable."""

    def __init__(self, iterations):
        super().__init__(f"no convergence after {iterations} iterations")
        self.iterations = iterations
