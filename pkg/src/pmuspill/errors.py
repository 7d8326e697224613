"""Exception hierarchy shared across the simulator, PMU model and loaders."""


class PmuSpillError(Exception):
    """Base class for every error raised by this package."""


class AssemblyError(PmuSpillError, SyntaxError):
    """Malformed micro-assembly. ``line`` is 1-based."""

    def __init__(self, message: str, line: int = 0):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


class MappingConflict(PmuSpillError):
    pass


class BudgetExhausted(PmuSpillError):
    """The global cycle cap was hit while executing architecturally."""


class IllegalSquash(PmuSpillError):
    pass


class PmuError(PmuSpillError):
    pass


class InvalidSlot(PmuError):
    pass


class UnknownEvent(PmuError):
    pass


class EventDisabled(UnknownEvent):
    """The event was removed from the programmable set by a mitigation policy."""


class PmuDisabled(PmuError):
    pass


class NoPrivilege(PmuError):
    pass


class InvalidSpec(PmuSpillError):
    pass


class DecodeFailure(PmuSpillError):
    pass


class ParseError(PmuSpillError):
    def __init__(self, message: str, line: int | None = None, offset: int | None = None):
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", col {offset}" if offset is not None else "") + ")"
        super().__init__(message + where)
        self.line = line
        self.offset = offset


class DuplicateEvent(ParseError):
    pass


class ConfigError(PmuSpillError):
    pass
