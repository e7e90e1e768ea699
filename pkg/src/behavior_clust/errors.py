"""Exception types shared across the package."""


class DataError(ValueError):
    """Input data violates a dataset or file-format contract."""


class DegenerateInputError(ValueError):
    """A statistic is undefined for the given input (zero spread, coincident centroids...)."""


class TrainingDivergedError(RuntimeError):
    """Classifier training produced a non-finite loss."""
