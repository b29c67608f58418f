"""Exception types raised by the inversion pipeline."""


class GlinvError(Exception):
    """Base class for all package errors."""


class FormatError(GlinvError):
    """Input file is malformed or violates a declared invariant."""


class SingularRecurrenceError(GlinvError):
    """A three-term recurrence denominator vanished at some node."""

    def __init__(self, node: int, message: str | None = None):
        self.node = node
        super().__init__(message or f"recurrence denominator vanished at node {node}")


class ConvergenceError(GlinvError):
    """Eigensolver failed to converge for a specific eigenpair."""

    def __init__(self, index: int, message: str | None = None):
        self.index = index
        super().__init__(message or f"eigensolver did not converge for pair {index}")


class InconsistentEigensystemError(GlinvError):
    """Extracted spectral data violates the weighted sum rule."""


class DegenerateSpectrumError(GlinvError):
    """Two computed levels are numerically indistinguishable."""


class NoninvertibleDataError(GlinvError):
    """A Gel'fand-Levitan row system is singular or too ill-conditioned."""

    def __init__(self, row: int, condition: float | None = None):
        self.row = row
        self.condition = condition
        detail = f" (condition estimate {condition:.3e})" if condition else ""
        super().__init__(f"inversion system for row m={row} is not solvable{detail}")


class DegenerateDataError(GlinvError):
    """Orthogonalization collapsed: a built vector has (near-)zero norm."""


class NonTridiagonalSynthesisError(GlinvError):
    """Spectral synthesis leaked outside the tridiagonal band."""

    def __init__(self, leakage: float, bound: float):
        self.leakage = leakage
        self.bound = bound
        super().__init__(
            f"off-band leakage {leakage:.3e} exceeds {bound:.3e}; spectral data "
            "is inconsistent with a tridiagonal operator"
        )


class RecursionDegenerateError(GlinvError):
    """Backward coefficient recursion hit a degenerate local system."""

    def __init__(self, node: int, message: str | None = None):
        self.node = node
        super().__init__(message or f"coefficient recursion degenerate at node {node}")


class SingularEdgeError(GlinvError):
    """The outer coupling makes the edge continuation ill-defined."""
