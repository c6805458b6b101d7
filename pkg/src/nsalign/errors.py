"""Exception hierarchy shared by every module."""


class NsaError(Exception):
    """Base class for all errors raised by nsalign."""


class InvalidInput(NsaError, ValueError):
    pass


class ShapeError(NsaError, ValueError):
    pass


class DegenerateCloud(NsaError):
    """Normalizer vanished, e.g. every point sits at the origin."""


class DegenerateNeighborhood(NsaError):
    """The reference neighbor of a point is at (numerically) zero distance."""


class NumericalError(NsaError, ArithmeticError):
    pass


class UndefinedCorrelation(NsaError):
    pass


class FormatError(NsaError, ValueError):
    pass


class DivergedError(NsaError):
    def __init__(self, epoch, value):
        super().__init__(f"loss became non-finite ({value}) at epoch {epoch}")
        self.epoch = epoch
        self.value = value


class FileAccessError(NsaError, OSError):
    """Reading or writing a file failed; the message names the path."""
