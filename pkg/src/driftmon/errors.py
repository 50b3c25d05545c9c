"""Exception hierarchy.

Everything raised on bad data or degenerate inputs derives from DriftmonError;
the CLI maps these to exit code 2. Usage errors are the CLI's own business.
"""


class DriftmonError(Exception):
    """Base class for all data and model errors."""


# --- embedding ingestion ---

class MalformedRow(DriftmonError):
    pass


class DimensionMismatch(DriftmonError):
    pass


class NonFiniteValue(DriftmonError):
    pass


class DuplicateId(DriftmonError):
    pass


# --- baseline fitting / metrics ---

class EmptyTrainingSet(DriftmonError):
    pass


class SingularCovariance(DriftmonError):
    pass


class MissingCovariance(DriftmonError):
    pass


class ZeroVector(DriftmonError):
    pass


# --- image features ---

class EmptyImage(DriftmonError):
    pass


class ImageTooSmall(DriftmonError):
    pass


class NotNormalized(DriftmonError):
    pass


# --- charts ---

class NonFiniteInput(DriftmonError):
    pass


class ZeroSigma(DriftmonError):
    pass


# --- simulation ---

class EmptyPool(DriftmonError):
    pass


# --- evaluation ---

class UnknownId(DriftmonError):
    pass


class UndefinedRate(DriftmonError):
    pass


class AllResamplesUndefined(DriftmonError):
    pass
