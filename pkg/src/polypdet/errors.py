"""Exception hierarchy shared across the toolkit."""


class PolypDetError(Exception):
    """Base class for every error raised deliberately by polypdet."""


class EmptyAnnotationError(PolypDetError, ValueError):
    pass


class EmptyCropError(PolypDetError, ValueError):
    pass


class NothingToSampleError(PolypDetError, ValueError):
    pass


class NotAPositiveSequenceError(PolypDetError, ValueError):
    pass


class ConfigError(PolypDetError, ValueError):
    pass


class ModelFormatError(PolypDetError, ValueError):
    pass


class DetectionsFormatError(PolypDetError, ValueError):
    """Malformed detections file; ``lineno`` is 1-based."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class DatasetError(PolypDetError):
    pass


class NoFramesError(DatasetError):
    pass


class UnreadableFileError(DatasetError):
    pass


class DimensionMismatchError(DatasetError):
    pass


class DuplicateStemError(DatasetError):
    pass
