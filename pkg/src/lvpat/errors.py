"""Exception types shared across the package."""


class ParameterError(ValueError):
    """An argument violates a documented precondition."""


class DataMismatchError(ValueError):
    """Two objects that must share a grid/geometry do not."""


class SingularTrainingSetError(RuntimeError):
    """Gram factorization failed even with the maximum diagonal ridge."""

    def __init__(self, minor_index: int, ridge: float):
        self.minor_index = minor_index
        self.ridge = ridge
        super().__init__(
            f"training traces are numerically dependent: leading minor "
            f"{minor_index} not positive definite at ridge {ridge:.3e}"
        )


class ContainerFormatError(ValueError):
    """A binary container is truncated, has a bad magic, or inconsistent lengths."""
