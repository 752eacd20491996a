"""Exception types raised across the package."""


class ContractViolation(ValueError):
    """An operation was called with arguments outside its preconditions."""


class InvalidPartitionError(ContractViolation):
    pass


class DegenerateTrainingError(ValueError):
    """Binary training data contains only one class."""


class TrainingFailedError(RuntimeError):
    pass


class JobFailedError(RuntimeError):
    """A map or reduce task raised; the original exception is chained."""

    def __init__(self, phase, key, cause):
        super().__init__(f"{phase} task for key {key!r} failed: {cause}")
        self.phase = phase
        self.key = key


class EmptyVocabularyError(ValueError):
    pass


class ParseError(ValueError):
    def __init__(self, path, line_no, message):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = str(path)
        self.line_no = line_no


class FormatError(ValueError):
    """A persisted model or vocabulary file is malformed, truncated or of an unknown version."""
