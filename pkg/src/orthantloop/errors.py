"""Exception hierarchy shared by all modules."""


class OrthantLoopError(Exception):
    """Base class for all library errors."""


class NonPositiveMass(OrthantLoopError):
    pass


class SingularMatrix(OrthantLoopError):
    pass


class IndexOutOfRange(OrthantLoopError):
    pass


class NonPositiveDiagonal(OrthantLoopError):
    pass


class OutOfRange(OrthantLoopError):
    pass


class DegenerateConditioning(OrthantLoopError):
    pass


class NonConvergence(OrthantLoopError):
    """Raised only when a caller insists on a converged result; the
    quadrature engines normally return the best estimate with a flag."""


class TailDominates(OrthantLoopError):
    pass


class DivergentIntegral(OrthantLoopError):
    pass


class AssemblyLimit(OrthantLoopError):
    pass


class InconsistentMomenta(OrthantLoopError):
    pass


class ParseError(OrthantLoopError):
    pass


class ValidationError(OrthantLoopError):
    pass
