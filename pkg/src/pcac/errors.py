"""Exception hierarchy shared by the codec modules."""


class PcacError(Exception):
    """Base class for all codec errors."""


class PlyError(PcacError):
    """Any problem reading a PLY file."""


class PlyHeaderError(PlyError):
    pass


class NonIntegerCoordinateError(PlyError):
    pass


class DuplicateCoordinateError(PlyError):
    pass


class EmptyCloudError(PlyError):
    pass


class ColorRangeError(PcacError, ValueError):
    pass


class EmptyIndexError(PcacError, ValueError):
    pass


class BitstreamError(PcacError):
    """Container or entropy stream could not be decoded."""


class TruncatedStreamError(BitstreamError):
    pass


class MagicError(BitstreamError):
    pass


class UnknownCodecError(BitstreamError):
    pass
