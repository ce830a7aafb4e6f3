"""Exception hierarchy.

Errors fall into three families that the CLI maps onto exit codes:
configuration problems (2), data problems (3) and everything else raised
while running (4).
"""


class EvoWeightsError(Exception):
    """Base class for every error raised by this package."""

    exit_code = 4


class ConfigError(EvoWeightsError):
    exit_code = 2


class DataError(EvoWeightsError):
    exit_code = 3


class SchemaError(ConfigError):
    pass


class MissingColumn(DataError):
    pass


class NonBinaryTarget(DataError):
    pass


class MissingValue(DataError):
    pass


class DegenerateSplit(DataError):
    pass


class TooFewRows(DataError):
    pass


class MetricError(EvoWeightsError, ValueError):
    pass


class LengthMismatch(MetricError):
    pass


class EmptyInput(MetricError):
    pass


class SingleClass(MetricError):
    pass


class NoPositives(MetricError):
    pass


class ModelError(EvoWeightsError, ValueError):
    pass


class DegenerateLabels(ModelError):
    pass


class NegativeWeight(ModelError):
    pass


class AllZeroWeights(ModelError):
    pass


class ShapeMismatch(ModelError):
    pass


class SlotMismatch(EvoWeightsError, ValueError):
    pass


class TooFewBlocks(EvoWeightsError, ValueError):
    pass


class SeedMismatch(ConfigError):
    pass
