"""Exception hierarchy shared across the package."""


class ElkError(Exception):
    """Base class for all package errors."""


class ConfigurationError(ElkError, ValueError):
    """Inconsistent or inadmissible configuration (dimensions, parameters)."""


class DomainError(ElkError, ValueError):
    """A function was evaluated outside its mathematical domain."""


class NetworkValidationError(ConfigurationError):
    """A reaction network failed one of the stoichiometric criteria."""

    def __init__(self, report):
        self.report = report
        super().__init__("; ".join(report.failures()))


class StateError(ElkError, ValueError):
    """A mixture state violates its invariants."""


class SolverError(ElkError, RuntimeError):
    """A numerical solve failed (non-convergence, singular system, ...)."""


class IncompatibleBoundaryError(SolverError):
    """Boundary data make the elliptic problem unsolvable."""


class UnsupportedScalingError(ElkError, ValueError):
    """The requested Maxwell scaling is outside the treated range."""


class ScenarioError(ElkError):
    """Base class for scenario file problems."""


class ScenarioParseError(ScenarioError, ValueError):
    """The scenario document cannot be parsed or has unknown fields."""


class ScenarioValidationError(ScenarioError, ValueError):
    """The scenario parsed but violates one or more validation rules.

    ``errors`` holds ``(rule, message)`` pairs, all of them, not just the first.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(f"[{rule}] {msg}" for rule, msg in self.errors))
