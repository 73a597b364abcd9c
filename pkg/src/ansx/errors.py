"""Exception hierarchy shared by every ansx module.

Each class carries the process exit code the CLI maps it to.
"""


class AnsError(Exception):
    exit_code = 1


class ValidationError(AnsError, ValueError):
    exit_code = 2


class BadDistribution(ValidationError):
    pass


class AlphabetTooLarge(ValidationError):
    pass


class OddCounts(ValidationError):
    pass


class PdTooLarge(ValidationError):
    pass


class Mismatch(ValidationError):
    """Probability vectors with incompatible supports."""


class NoNegativeRoot(ValidationError):
    pass


class NoConvergence(AnsError):
    pass


class CorruptionError(AnsError):
    exit_code = 3


class OutOfDigits(CorruptionError):
    pass


class TerminalStateMismatch(CorruptionError):
    pass


class BadMagic(CorruptionError):
    pass


class ModelMismatch(CorruptionError):
    pass


class HeaderCorrupt(CorruptionError):
    pass


class NodeBudgetExhausted(AnsError):
    exit_code = 4


class FrontLost(AnsError):
    exit_code = 4
