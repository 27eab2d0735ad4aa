class ValidationError(Exception):
    ...


class InvalidArgumentError(ValueError):
    ...


class InvalidUseError(Exception):
    ...


class TruncationError(Exception):
    ...


class ProtocolError(Exception):
    ...


class ScheduleMismatchError(ProtocolError):
    ...


class TagConflictError(ProtocolError):
    ...


class DeadlockError(Exception):
    ...


class OutputError(OSError):
    ...
