"""
errors.py - Exception taxonomy for the cavity machine
Every module raises one of these so the CLI and the HTTP layer can map them to exit codes / status codes
"""

from typing import Optional


class CavityMachineError(Exception):
    """Base class for all cavity machine errors"""


class UsageError(CavityMachineError, ValueError):
    """Caller passed something the operation cannot accept"""


class ContractViolation(CavityMachineError, ValueError):
    """A mathematical precondition (hermiticity, unitarity) does not hold"""


class ConfigurationError(CavityMachineError):
    """Machine configuration cannot support the requested construction"""


class CompilationError(CavityMachineError):
    """A control sequence cannot be compiled into a pulse schedule"""

    def __init__(self, message: str, steps: Optional[list] = None):
        super().__init__(message)
        self.steps = list(steps or [])


class SequenceFormatError(UsageError):
    """Malformed JSON document, with the position of the first error"""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        if line is not None:
            message = f"{message} (line {line} column {column})"
        super().__init__(message)
        self.line = line
        self.column = column
