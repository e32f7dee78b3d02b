"""Exception hierarchy shared by every stage of the pipeline."""


class IrisError(Exception):
    """Base class for all errors raised by irisct."""


# image / dataset input
class UnsupportedFormat(IrisError):
    pass


class CorruptImage(IrisError):
    pass


class EmptyDataset(IrisError):
    pass


class SpecOutOfBounds(IrisError):
    pass


# segmentation / normalization
class NoBoundaryFound(IrisError):
    pass


class DegenerateGeometry(IrisError):
    pass


class TooFewRows(IrisError):
    pass


# transforms
class TooSmall(IrisError):
    pass


class DimMismatch(IrisError):
    pass


class UnsupportedDirectionCount(IrisError):
    pass


class MalformedPyramid(IrisError):
    pass


# features / classifiers
class EmptyOverlap(IrisError):
    pass


class InsufficientData(IrisError):
    pass


class DegenerateLabels(IrisError):
    pass


class DegenerateSplit(IrisError):
    pass


class EmptyMask(IrisError):
    pass
