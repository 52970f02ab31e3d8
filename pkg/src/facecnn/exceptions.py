"""Exception hierarchy shared across the package."""


class ConfigurationError(ValueError):
    """Shapes, sizes or hyperparameters that cannot work together."""


class CheckpointError(Exception):
    """Base class for checkpoint load failures."""


class CheckpointMissingError(CheckpointError, FileNotFoundError):
    pass


class CheckpointVersionError(CheckpointError):
    pass


class CheckpointShapeError(CheckpointError):
    pass


class CheckpointValueError(CheckpointError):
    pass


class PGMError(ValueError):
    """Malformed PGM input. ``offset`` is the byte position of the problem."""

    def __init__(self, message, path=None, offset=None):
        self.path = path
        self.offset = offset
        where = []
        if path is not None:
            where.append(str(path))
        if offset is not None:
            where.append(f"byte {offset}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class PGMHeaderError(PGMError):
    pass


class PGMTruncatedError(PGMError):
    pass


class PGMMaxvalError(PGMError):
    pass


class DatasetError(ValueError):
    """Dataset directory does not follow the ``root/<class>/*.pgm`` layout."""

    def __init__(self, message, path=None):
        self.path = path
        if path is not None:
            message = f"{message}: {path}"
        super().__init__(message)
