"""Exception types raised by divcore."""


class DivcoreError(Exception):
    """Base class for every error divcore raises on bad data or state."""


class DataError(DivcoreError, ValueError):
    """Malformed or inconsistent input: bad files, dimension mismatches, zero vectors."""


class MemoryBudgetError(DivcoreError):
    pass


class OracleGuardError(DivcoreError):
    """An offline oracle was asked for an instance too large to enumerate."""


class FitError(DivcoreError):
    pass
