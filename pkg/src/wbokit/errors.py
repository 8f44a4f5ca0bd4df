"""Exception types shared across the toolkit."""


class ToolkitError(Exception):
    """Base class for every error this package raises on purpose."""


class ContractViolationError(ToolkitError, ValueError):
    """An argument failed a documented precondition."""


class ModelError(ToolkitError, ValueError):
    """Base class for model-file and model-structure problems."""


class ModelSyntaxError(ModelError):
    """The model file is not valid JSON.

    Carries ``line`` and ``column`` of the first offending character.
    """

    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column


class ModelSchemaError(ModelError):
    """The JSON parsed but a required field is missing or ill-typed."""


class UnknownLinkError(ModelError):
    """A joint references a link name that does not exist."""


class UnknownJointError(ModelError):
    """An operation referenced a joint name that does not exist or is fixed."""


class CycleError(ModelError):
    """The links and joints do not form a tree rooted at the base."""


class BadAxisError(ModelError):
    """A joint axis is missing, malformed, or not unit length."""


class BadInertiaError(ModelError):
    """A link's mass properties are inconsistent or non-physical."""


class MirrorError(ModelError):
    """Mirror metadata is malformed or incompatible with the joints."""


class TrajectoryError(ToolkitError, ValueError):
    """A trajectory input is malformed (columns, shapes, or time stamps)."""


class NumericalError(ToolkitError, RuntimeError):
    """A numerical operation could not be completed reliably."""


class SingularInertiaError(NumericalError):
    """The locked inertia is singular or too ill-conditioned to invert."""


class SingularNormalMatrixError(NumericalError):
    """The least-squares normal matrix is singular (try a positive ridge)."""


class FitIterationError(NumericalError):
    """An error occurred inside the fit loop; ``iteration`` says where."""

    def __init__(self, message, iteration):
        super().__init__(f"iteration {iteration}: {message}")
        self.iteration = iteration


class DomainError(ToolkitError, ValueError):
    """A configuration left the region where the fitted quaternion is valid."""


class QuaternionDomainError(DomainError):
    """The fitted vector part reached unit norm; no scalar part exists."""


class ScalarFloorError(DomainError):
    """The quaternion scalar part fell below the rate-map floor of 0.5."""


class DegenerateGridError(ToolkitError, ValueError):
    """A fitting grid carries no usable information."""
