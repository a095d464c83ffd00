"""Exception hierarchy shared by every module."""


class SandbankError(Exception):
    """Base class for all errors raised by this package."""


class RasterSizeError(SandbankError, ValueError):
    pass


class ShapeMismatchError(SandbankError, ValueError):
    pass


class ConfigurationError(SandbankError, ValueError):
    pass


class CoregistrationError(SandbankError, ValueError):
    pass


class RasterReadError(SandbankError, OSError):
    pass


class DegenerateSampleError(SandbankError, ValueError):
    pass


class InsufficientPixelsError(SandbankError, ValueError):
    pass
