"""Exception hierarchy.

``DataError`` subclasses map to CLI exit code 2 (bad inputs: files,
formats, datasets). Everything else under ``Speech2TrajError`` is either
a usage problem (``InvalidConfig``, exit 1) or an internal fault (exit 3).
This module must stay free of heavy imports; the CLI loads it before numpy.
"""


class Speech2TrajError(Exception):
    pass


class DataError(Speech2TrajError):
    """Problem with external input data (exit code 2)."""


# audio
class MalformedContainer(DataError):
    pass


class UnsupportedFormat(DataError):
    pass


# nn kernels
class ShapeMismatch(Speech2TrajError):
    pass


class DegenerateBatch(Speech2TrajError):
    pass


class NegativeInput(Speech2TrajError):
    pass


# model / checkpoint
class InvalidSpec(Speech2TrajError):
    pass


class IOFailure(DataError):
    pass


class BadMagic(DataError):
    pass


class VersionMismatch(DataError):
    pass


class ChecksumMismatch(DataError):
    pass


class TensorShapeMismatch(DataError):
    pass


# dataset
class MissingSplitLists(DataError):
    pass


class EmptyDataset(DataError):
    pass


class NoiseTooShort(DataError):
    pass


class ZeroSignalPower(DataError):
    pass


# training / runtime / service
class InvalidConfig(Speech2TrajError):
    """Bad configuration values (exit code 1)."""


class NonFiniteLoss(Speech2TrajError):
    pass


class EngineStopped(Speech2TrajError):
    pass


class BindFailure(DataError):
    pass
