import json

import numpy as np
import pytest

from evoweights._accel import HAVE_NUMBA, backend_override

PROMOTION_CSV = """\
Race,Position,Oral,Written,Combined,Promotion
W,Captain,89.52,95,92.808,1
W,Captain,80,95,89,1
W,Captain,82.38,87,85.152,1
W,Captain,88.57,76,81.028,0
H,Lieutenant,76.19,84,80.876,0
H,Captain,76.19,82,79.676,0
W,Captain,76.19,82,79.676,1
H,Lieutenant,70,84,78.4,1
W,Captain,73.81,81,78.124,0
W,Lieutenant,84.29,72,76.916,1
"""

PROMOTION_WEIGHTS = [0.84, 0.84, 0.84, 1.4, 0.6, 0.6, 0.84, 1.8, 1.4, 0.84]

# toy example: group A = 0, group B = 1
TOY_GROUPS = np.array([0, 0, 1, 1, 1, 1])
TOY_Y = np.array([1, 0, 0, 0, 1, 1])
TOY_BEFORE = np.array([0, 0, 0, 1, 1, 1])
TOY_AFTER = np.array([0, 0, 0, 0, 0, 1])


@pytest.fixture
def promotion_files(tmp_path):
    csv_path = tmp_path / "ricci_example.csv"
    csv_path.write_text(PROMOTION_CSV)
    schema_path = tmp_path / "ricci_example.schema.json"
    schema_path.write_text(json.dumps(
        {"target_column": "Promotion", "favorable_label": "1", "sensitive_columns": ["Race"]}))
    return csv_path, schema_path


@pytest.fixture
def promotion(promotion_files):
    from evoweights.dataset import DatasetSchema, load_csv

    csv_path, schema_path = promotion_files
    return load_csv(csv_path, DatasetSchema.from_json(schema_path))


BACKENDS = ["numba", "numpy"] if HAVE_NUMBA else ["numpy"]


@pytest.fixture(params=BACKENDS)
def each_backend(request):
    with backend_override(request.param):
        yield request.param
