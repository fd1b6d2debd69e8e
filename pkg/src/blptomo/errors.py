class ValidationError(ValueError):
    """A value violates one of the documented numerical invariants."""


class DatasetFormatError(ValueError):
    """A serialized document could not be parsed or has an unsupported layout."""


class OptimizerError(RuntimeError):
    """Every optimizer restart was abandoned."""
