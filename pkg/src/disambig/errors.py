"""Exception types shared across the package."""


class DisambigError(Exception):
    """Base class for package errors."""


class DomainError(DisambigError):
    """An argument is outside the domain an operation is defined on."""


class ValidationError(DisambigError):
    """A value violates a structural invariant (e.g. a distribution not on the simplex)."""


class SchemaError(DisambigError):
    """A file or payload does not conform to the expected JSON schema."""


class ConfigInfeasible(DisambigError):
    """A generator configuration cannot be satisfied (e.g. objects do not fit)."""


class IncompatibleObservation(DisambigError):
    """An observation variant does not match the question that was asked."""


class ConfigError(DisambigError):
    """A user-supplied configuration value or key is invalid."""


class UnknownSession(DisambigError):
    """No live session exists with the given id."""


class SessionDone(DisambigError):
    """The session already ended with a grasp; no further answers are accepted."""


class StepLimitExceeded(DisambigError):
    """An episode ran past the safety cap on decision steps."""


class EpisodeError(DisambigError):
    """An episode inside a benchmark suite failed; carries the scene index."""

    def __init__(self, scene_index: int, message: str):
        super().__init__(f"scene {scene_index}: {message}")
        self.scene_index = scene_index
