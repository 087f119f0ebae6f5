"""Exception catalog shared across the package."""


class SchedcertError(Exception):
    """Base class for all package-specific failures."""


class InstanceError(SchedcertError):
    """Malformed instance data (bad ids, nonpositive sizes, bad matrix)."""


class NonPositiveDemand(InstanceError):
    """A packing-matrix entry is zero or negative."""


class IncompleteSchedule(InstanceError):
    """A schedule processes less work than some job requires."""


class CostFunctionError(SchedcertError):
    """Cost function outside the supported catalog or failing validation."""


class UnsupportedShape(CostFunctionError):
    """An exact query (infimum/inverse) is unavailable for this shape."""


class NegativeDual(SchedcertError):
    """A dual assignment produced a negative multiplier where the
    construction guarantees nonnegativity (policy/shape outside scope)."""


class NoSuccessor(SchedcertError):
    """A completed job found no partner curve matching its own at its
    completion time (broken invariant upstream)."""


class IterationCapExceeded(SchedcertError):
    """The concave reduction loop exceeded its iteration budget."""


class StepUnderflow(SchedcertError):
    """The rate-curve integrator could not localize a completion."""


class OutOfTheoremScope(SchedcertError):
    """Requested a certificate for a policy/cost combination the theory
    does not cover."""


class TooLarge(SchedcertError):
    """Slot LP would exceed the configured size budget."""


class UnboundedError(SchedcertError):
    """LP is unbounded (should not happen for transportation instances)."""


class InfeasibleError(SchedcertError):
    """LP is infeasible (demand exceeds capacity within the horizon)."""
