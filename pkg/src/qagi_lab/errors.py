"""Exception hierarchy shared by every module."""


class QagiLabError(Exception):
    """Base class for all errors raised by qagi_lab."""


class DimensionError(QagiLabError, ValueError):
    """Shapes, subsystem dimensions or indices do not line up."""


class PreconditionError(QagiLabError, ValueError):
    """An input violates a documented precondition."""


class InvalidDensityError(QagiLabError, ValueError):
    """A matrix failed one of the density-operator invariants.

    ``violation`` is one of ``"hermitian"``, ``"trace"``, ``"psd"`` or
    ``"finite"`` so callers can tell the failures apart.
    """

    def __init__(self, violation: str, message: str):
        super().__init__(f"{violation}: {message}")
        self.violation = violation


class ChannelError(QagiLabError, ValueError):
    """A channel, POVM or instrument failed its validity check."""


class InconsistentPerceptError(QagiLabError, ValueError):
    """A percept has zero likelihood under every environment in the mixture."""


class BudgetExceededError(QagiLabError, RuntimeError):
    """An exhaustive search would exceed its configured branching budget."""


class OptimizationError(QagiLabError, RuntimeError):
    """A numerical optimizer produced a non-finite objective."""


class ScenarioError(QagiLabError, ValueError):
    """A scenario file failed validation.

    Carries the offending file, field and (when it can be located) line.
    """

    def __init__(self, message: str, path=None, field=None, line=None):
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = ": ".join([", ".join(where)]) + ": " if where else ""
        super().__init__(prefix + message)
        self.path = path
        self.field = field
        self.line = line
