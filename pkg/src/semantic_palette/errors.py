"""Exception types.

Everything derives from :class:`PaletteToolkitError`, itself a ``ValueError``,
so callers that only care about "bad input" can catch one thing. The CLI maps
these to exit code 1; ``OSError`` maps to exit code 2.
"""


class PaletteToolkitError(ValueError):
    pass


# palettes / tensors
class NegativeEntryError(PaletteToolkitError):
    pass


class NotNormalizedError(PaletteToolkitError):
    pass


class TooFewClassesError(PaletteToolkitError):
    pass


class NonFiniteError(PaletteToolkitError):
    pass


class ShapeMismatchError(PaletteToolkitError):
    pass


# label-map files
class MalformedHeaderError(PaletteToolkitError):
    pass


class LabelOutOfRangeError(PaletteToolkitError):
    pass


class TruncatedPayloadError(PaletteToolkitError):
    pass


# normalization floors hit in strict mode
class AllZeroColumnError(PaletteToolkitError):
    pass


class ZeroRowError(PaletteToolkitError):
    pass


class ZeroColumnError(PaletteToolkitError):
    pass


# losses
class EmptyEditSetError(PaletteToolkitError):
    pass


class EmptyPyramidError(PaletteToolkitError):
    pass


# palette model
class TooFewSamplesError(PaletteToolkitError):
    pass


class DegenerateComponentError(PaletteToolkitError):
    pass


class DegenerateSampleError(PaletteToolkitError):
    pass


class AllZeroAfterClipError(PaletteToolkitError):
    pass


# transforms / editing
class AlphaOutOfRangeError(PaletteToolkitError):
    pass


class RegionOutOfBoundsError(PaletteToolkitError):
    pass


class BadBackgroundBudgetError(PaletteToolkitError):
    pass


# metrics
class EmptyPopulationError(PaletteToolkitError):
    pass


class MixedClassCountsError(PaletteToolkitError):
    pass


class DimensionMismatchError(PaletteToolkitError):
    pass


class InvalidConfigError(PaletteToolkitError):
    pass
