"""Exception hierarchy shared by all modules.

Each error carries a stable ``code`` string used by the CLI when it
emits machine-readable error reports.
"""


class EightVertexError(Exception):
    code = "error"
    exit_code = 1


class GraphError(EightVertexError):
    code = "graph"
    exit_code = 2

    def __init__(self, message, diagnostics=None, line=None):
        super().__init__(message)
        self.diagnostics = diagnostics
        self.line = line


class InvalidPattern(EightVertexError, ValueError):
    code = "invalid_pattern"


class InvalidPairing(EightVertexError, ValueError):
    code = "invalid_pairing"


class NoNonnegativeSolution(EightVertexError):
    code = "no_nonnegative_solution"


class TooLarge(EightVertexError):
    code = "too_large"


class InternalError(EightVertexError):
    code = "internal"


class ZeroWeightState(EightVertexError):
    code = "zero_weight_state"


class Infeasible(EightVertexError):
    code = "infeasible"
    exit_code = 4


class BudgetExhausted(EightVertexError):
    code = "budget_exhausted"
    exit_code = 5


class RegionError(EightVertexError, ValueError):
    code = "region"
    exit_code = 3


class MarginError(EightVertexError):
    code = "margin"
    exit_code = 5


class LogOverflow(EightVertexError):
    code = "log_overflow"

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class NotReached(EightVertexError):
    code = "not_reached"

    def __init__(self, message, sequence=None):
        super().__init__(message)
        self.sequence = sequence


class MonotonicityViolation(EightVertexError):
    code = "monotonicity_violation"


class OddEqParity(UserWarning):
    """A base-case cycle carries an odd number of 2-in/2-out nodes."""
