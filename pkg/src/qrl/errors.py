"""Exception hierarchy. Each error class carries the CLI exit code it maps to."""


class QRLError(Exception):
    exit_code = 1


class ConfigError(QRLError):
    exit_code = 2

    def __init__(self, key, message, line=None):
        self.key = key
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{key}{where}: {message}")


class UnknownKey(ConfigError):
    pass


class ConfigTypeError(ConfigError):
    pass


class InvariantViolation(ConfigError):
    pass


class NoBarrier(QRLError):
    """The shallow well is washed out: fewer than three stationary points."""

    exit_code = 3


class TooFewLevels(QRLError):
    exit_code = 4


class DegenerateWindow(QRLError):
    exit_code = 4


class NoInteriorMinimum(QRLError):
    exit_code = 5


class SolverBreakdown(QRLError):
    exit_code = 6


EXIT_CODES = {
    "ok": 0,
    "unexpected": 1,
    "config": ConfigError.exit_code,
    "no_barrier": NoBarrier.exit_code,
    "too_few_levels": TooFewLevels.exit_code,
    "no_interior_minimum": NoInteriorMinimum.exit_code,
    "solver_breakdown": SolverBreakdown.exit_code,
    "io": 7,
}
