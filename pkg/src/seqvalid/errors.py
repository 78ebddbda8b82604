"""Exception types raised across the package."""


class SeqValidError(Exception):
    """Base class for all package errors."""


class UnknownSymbol(SeqValidError):
    def __init__(self, position: int, text: str = ""):
        self.position = position
        super().__init__(f"no alphabet token matches at position {position}" + (f" in {text!r}" if text else ""))


class TooLong(SeqValidError):
    pass


class NoPadToken(SeqValidError):
    pass


class TooLargeToEnumerate(SeqValidError):
    pass


class NonFiniteLoss(SeqValidError):
    pass


class CorpusInvalidEntry(SeqValidError):
    def __init__(self, index: int, reason: str = ""):
        self.index = index
        super().__init__(f"corpus entry {index} is not valid" + (f": {reason}" if reason else ""))


class DeadEnd(SeqValidError):
    pass


class EmptyRow(SeqValidError):
    pass


class CorruptFile(SeqValidError):
    def __init__(self, offset: int, message: str = "corrupt file"):
        self.offset = offset
        super().__init__(f"{message} (offset {offset})")


class VersionMismatch(SeqValidError):
    def __init__(self, found, expected):
        self.found = found
        self.expected = expected
        super().__init__(f"format version {found} not supported (expected {expected})")


class ParseError(SeqValidError):
    """A text file line could not be parsed."""

    def __init__(self, path, lineno: int, message: str):
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {message}")


class StageError(SeqValidError):
    """Wraps an error raised inside one pipeline stage."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
