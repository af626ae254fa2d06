class AnchorAugError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(AnchorAugError, ValueError):
    pass


class DataError(AnchorAugError, ValueError):
    pass


class DimensionMismatchError(DataError):
    pass


class LabelRangeError(DataError):
    pass


class ZeroDenominatorError(AnchorAugError, ArithmeticError):
    pass


class TrainingDivergedError(AnchorAugError, RuntimeError):
    """Raised when the training loss becomes non-finite.

    The partial :class:`~anchoraug.regressors.mlp.TrainReport` is attached as
    ``report``.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ConfigHashMismatchError(ConfigError):
    pass
