"""Exception hierarchy shared by every stage."""


class CandleSegError(Exception):
    """Base class for all package errors."""


class ImageFileMissing(CandleSegError, FileNotFoundError):
    def __init__(self, path):
        self.path = str(path)
        super().__init__(f"image file not found: {self.path}")


class UnsupportedFormat(CandleSegError, ValueError):
    def __init__(self, path, detail=""):
        self.path = str(path)
        msg = f"unsupported image format: {self.path}"
        super().__init__(f"{msg} ({detail})" if detail else msg)


class CorruptHeader(CandleSegError, ValueError):
    def __init__(self, path, detail=""):
        self.path = str(path)
        msg = f"corrupt image header: {self.path}"
        super().__init__(f"{msg} ({detail})" if detail else msg)


class ImageIOError(CandleSegError, OSError):
    def __init__(self, path, cause):
        self.path = str(path)
        self.cause = cause
        super().__init__(f"cannot write {self.path}: {cause}")


class BoundsError(CandleSegError, ValueError):
    pass


class DomainError(CandleSegError, ValueError):
    pass


class DimensionMismatch(CandleSegError, ValueError):
    pass


class InfeasibleK(CandleSegError, ValueError):
    pass


class ConfigError(CandleSegError, ValueError):
    """Invalid configuration. ``key`` names the offending entry, ``line`` the parse location."""

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        super().__init__(message)


class StageError(CandleSegError):
    """A pipeline stage failed; wraps the underlying error."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")
