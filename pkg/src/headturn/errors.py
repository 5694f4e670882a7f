"""Exception hierarchy shared across the package."""


class HeadturnError(Exception):
    """Base class for all package errors."""


class InvalidInputError(HeadturnError, ValueError):
    pass


class ScenarioLoadError(HeadturnError):
    """A scenario file failed schema or invariant validation.

    ``violations`` lists every problem found, not just the first.
    """

    def __init__(self, message: str, violations: list[str] | None = None):
        super().__init__(message)
        self.violations = violations or [message]


class ActionTargetError(HeadturnError):
    """An action names an object the environment or memory cannot resolve."""


class PerceptionError(HeadturnError):
    pass


class ContractError(HeadturnError):
    """A component returned output that breaks its declared contract."""


class DecisionError(HeadturnError):
    pass


class DecompositionError(DecisionError):
    pass


class BackendError(HeadturnError):
    """Remote call failed; ``diagnostics`` holds per-attempt detail."""

    def __init__(self, message: str, diagnostics: list[str] | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or []


class ParseError(DecisionError):
    pass


class TemplateError(HeadturnError):
    pass


class TrajectoryLoadError(HeadturnError):
    pass


class ReportError(HeadturnError):
    pass


class ReplayError(HeadturnError):
    pass
