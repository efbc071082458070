"""Exception hierarchy shared across the package."""


class AlpsimError(Exception):
    """Base class for all package errors."""


class ConfigError(AlpsimError):
    """Base class for reactor-configuration problems."""


class ConfigSchemaError(ConfigError):
    """Document malformed: missing/mistyped/unknown fields."""


class ConfigReferenceError(ConfigError):
    """A cross-reference (chemical, surface, solid, valve) does not resolve."""


class ConfigPhysicsError(ConfigError):
    """Values are structurally valid but physically inconsistent."""


class RecipeParseError(AlpsimError):
    """Recipe text failed to parse; carries the offending position."""

    def __init__(self, message: str, line: int, column: int | None = None):
        self.line = line
        self.column = column
        where = f"line {line}" if column is None else f"line {line}, column {column}"
        super().__init__(f"{where}: {message}")


class RecipeValidationError(AlpsimError):
    """A recipe has hard safety violations and may not be executed."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class SolverInstabilityError(AlpsimError):
    """Time integration diverged (non-finite state or collapsed step size)."""

    def __init__(self, message: str, time: float):
        self.time = time
        super().__init__(f"t={time:.6g} s: {message}")


class BudgetExceededError(AlpsimError):
    """Requested experiment does not fit in the remaining reactor-time budget."""

    def __init__(self, requested: float, remaining: float):
        self.requested = requested
        self.remaining = remaining
        super().__init__(
            f"recipe needs {requested:g} s but only {remaining:g} s remain"
        )


class UnknownIdError(AlpsimError):
    """Lookup of a session/experiment/config id failed."""
