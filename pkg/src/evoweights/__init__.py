"""Fairness-aware sample reweighting: deterministic, equal and evolved weights."""

__version__ = "0.1.0"

from ._accel import backend  # noqa: E402
from .dataset import (  # noqa: E402
    Dataset,
    DatasetSchema,
    GroupIndex,
    build_group_index,
    kfold,
    load_csv,
    train_test_split,
    undersample,
)
from .metrics import MetricPair, accuracy, auroc, dpd, score_pair, sfn  # noqa: E402
from .pareto import MinPoint, ParetoFront, hypervolume_2d, pareto_front  # noqa: E402
from .reweight import SlotWeights, deterministic_weights, equal_weights, expand_and_assign  # noqa: E402
