class UncertaintyToolkitError(Exception):
    """Base class for every error raised by the toolkit."""


class DimensionError(UncertaintyToolkitError, ValueError):
    pass


class DomainError(UncertaintyToolkitError, ValueError):
    pass


class ContractError(UncertaintyToolkitError, ValueError):
    pass


class TapeStateError(UncertaintyToolkitError, RuntimeError):
    pass


class ParameterError(UncertaintyToolkitError, ValueError):
    pass


class ConfigurationError(UncertaintyToolkitError):
    pass


class TrainingDivergedError(UncertaintyToolkitError, ArithmeticError):
    def __init__(self, message, epoch=None, step=None):
        super().__init__(message)
        self.epoch = epoch
        self.step = step


class SerializationError(UncertaintyToolkitError):
    pass
