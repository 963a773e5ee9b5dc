"""Exception types shared across the toolkit."""


class BuglocError(Exception):
    """Base class for all toolkit errors."""


class LexError(BuglocError):
    def __init__(self, line, col, message):
        super().__init__(f"line {line}, col {col}: {message}")
        self.line = line
        self.col = col


class ParseError(BuglocError):
    def __init__(self, line, expected, found=""):
        detail = f"expected {expected}"
        if found:
            detail += f", found {found!r}"
        super().__init__(f"line {line}: {detail}")
        self.line = line
        self.expected = expected
        self.found = found


class UnsupportedConstruct(BuglocError):
    def __init__(self, line, construct):
        super().__init__(f"line {line}: unsupported construct: {construct}")
        self.line = line
        self.construct = construct


class PlaceholderExhausted(BuglocError):
    pass


class ShapeOverflow(BuglocError):
    pass


class ShapeMismatch(BuglocError):
    pass


class IndexOutOfRange(BuglocError):
    pass


class DegenerateCorpus(BuglocError):
    pass


class VersionMismatch(BuglocError):
    pass


class SchemaMismatch(BuglocError):
    pass


class CorruptFile(BuglocError):
    pass


class EmptyPool(BuglocError):
    pass


class PoolTooSmall(BuglocError):
    pass


class NotAFailure(BuglocError):
    pass


class NoPassingTests(BuglocError):
    pass


class TooManyHunks(BuglocError):
    pass


class RunnerFailure(BuglocError):
    def __init__(self, test_id, detail):
        super().__init__(f"runner failed on test {test_id}: {detail}")
        self.test_id = test_id
        self.detail = detail


class ManifestInvalid(BuglocError):
    pass


class MissingGroundTruth(BuglocError):
    pass
