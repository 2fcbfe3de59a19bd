"""Exception and warning types raised across the pipeline."""


class HscsError(Exception):
    """Base class for all pipeline errors."""


class IoError(HscsError, OSError):
    pass


class MissingDepth(HscsError):
    def __init__(self, stem):
        super().__init__(f"no depth map for {stem!r}")
        self.stem = stem


class DimensionMismatch(HscsError, ValueError):
    pass


class EmptyGroup(HscsError):
    pass


class ImageTooSmall(HscsError, ValueError):
    pass


class MissingIntra(HscsError):
    pass


class KTooLarge(HscsError, ValueError):
    pass


class TooFewSeeds(HscsError, ValueError):
    pass


class EmptySeedSet(HscsError):
    pass


class SingleImageGroup(HscsError):
    pass


class LengthMismatch(HscsError, ValueError):
    pass


class SolverFailure(HscsError, RuntimeError):
    pass


class NoGroundTruth(HscsError):
    pass


class DegenerateTextures(UserWarning):
    """K-means over filter responses found fewer distinct points than textons."""
