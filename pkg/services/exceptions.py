"""
Error hierarchy shared by the numerical services and the management commands.

Every error carries a ``context`` dict so that callers can attach the model id,
config hash or the offending value before re-raising.
"""


class CdLabError(Exception):
    """Base class for every failure raised by the lab."""

    def __init__(self, message="", **context):
        super().__init__(message)
        self.context = dict(context)

    def with_context(self, **context):
        self.context.update(context)
        return self

    def __str__(self):
        message = super().__str__()
        if not self.context:
            return message
        details = ", ".join(f"{key}={value}" for key, value in self.context.items())
        return f"{message} [{details}]"


# cdcore
class DegenerateForm(CdLabError):
    pass


class SingularPoint(CdLabError):
    pass


class MetricDegenerate(CdLabError):
    pass


class ZeroBracket(CdLabError):
    pass


class QVanishes(CdLabError):
    pass


class KappaMismatch(CdLabError):
    pass


# integrator
class StepUnderflow(CdLabError):
    pass


class NonFinite(CdLabError):
    pass


class SingularityPersistent(CdLabError):
    pass


# lie
class QuadratureDiverges(CdLabError):
    pass


class ResolventZero(CdLabError):
    pass


class NoConvergence(CdLabError):
    pass


class SingularJacobian(CdLabError):
    pass


class LeftDomain(CdLabError):
    pass


class DegenerateLevel(CdLabError):
    pass


class NoSuchLevel(CdLabError):
    pass


# models
class DegeneratePair(CdLabError):
    pass


class BadIndexSet(CdLabError):
    pass


class TailOverflow(CdLabError):
    pass


class NoRoot(CdLabError):
    pass


class ZeroSpinor(CdLabError):
    pass


# analysis
class NotConverged(CdLabError):
    pass


class NoRecurrence(CdLabError):
    """Raised when a trajectory settles on a fixed point or a torus instead of a cycle."""

    def __init__(self, message="", dimension=0, **context):
        super().__init__(message, dimension=dimension, **context)
        self.dimension = dimension


class OpenLoop(CdLabError):
    pass


class InsufficientSamples(CdLabError):
    pass


class BranchJump(CdLabError):
    pass


class NoLimit(CdLabError):
    pass


class NoSolution(CdLabError):
    pass


# relsym
class SurfaceReached(CdLabError):
    pass


# cli
class ConfigInvalid(CdLabError):
    """A run configuration failed validation; ``path`` names the offending key."""

    def __init__(self, message="", path="", **context):
        super().__init__(message, path=path, **context)
        self.path = path


class UnknownSuite(CdLabError):
    pass


class UnknownModel(CdLabError):
    pass


class BudgetExceeded(CdLabError):
    pass
