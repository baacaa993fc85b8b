"""Exception types raised across the package."""


class PulsegraphError(Exception):
    """Base class for all package errors."""


class InvalidInput(PulsegraphError):
    """Input data violates an operation's precondition (empty, too short, ...)."""


class InvalidFilterSpec(PulsegraphError):
    """Filter cutoffs are inconsistent with each other or with Nyquist."""


class EmptyResult(PulsegraphError):
    """An operation that must produce items found none."""


class MissingPrior(PulsegraphError):
    """A heart-rate prior is required but empty or unavailable."""


class ParseError(PulsegraphError):
    """A file could not be parsed; carries file and line context."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where = f" ({where})"
        super().__init__(f"{message}{where}")


class RangeError(PulsegraphError):
    """A parsed value lies outside its physiological/valid range."""


class ManifestError(PulsegraphError):
    """A session manifest is missing required entries or files."""


class CorrUndefined(PulsegraphError):
    """Pearson correlation is undefined (zero variance in a series)."""


class PipelineStageError(PulsegraphError):
    """Wraps a failure inside a named pipeline stage."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}': {cause}")
