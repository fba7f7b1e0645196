"""Exception hierarchy shared by all subpackages."""


class LumplabError(Exception):
    """Base class for every error raised by lumplab."""


class NumericalError(LumplabError):
    """A numerical kernel failed (CLI exit code 3)."""


class NotPositiveDefinite(NumericalError):
    """Cholesky met a non-positive pivot.

    Attributes
    ----------
    pivot : int
        Zero-based index of the offending pivot.
    value : float
        The pivot value that was encountered.
    """

    def __init__(self, pivot, value=float("nan"), what="matrix"):
        self.pivot = int(pivot)
        self.value = float(value)
        super().__init__(
            f"{what} is not positive definite: pivot {self.pivot} = {self.value:.6g}"
        )


class ConvergenceError(NumericalError):
    """An iterative kernel hit its iteration cap."""

    def __init__(self, message, off_norm=float("nan")):
        self.off_norm = float(off_norm)
        super().__init__(f"{message} (off-diagonal norm {self.off_norm:.3e})")


class SingularPencil(NumericalError):
    """A and B share a (near) null vector, so every scalar is an eigenvalue."""


class Unstable(NumericalError):
    """Time integration blew up."""

    def __init__(self, step, message="time integration became unstable"):
        self.step = int(step)
        super().__init__(f"{message} at step {self.step}")


class DimensionError(LumplabError, ValueError):
    """Operand shapes are inconsistent."""


class ConfigError(LumplabError, ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""
