from __future__ import annotations

import numpy as np
import pytest

from xpop.eventlog import AttributeSchema
from xpop.preprocess import ColumnMeta, EncodedMatrix


def make_matrix(X, labels, types=None, names=None) -> EncodedMatrix:
    """Build an EncodedMatrix straight from arrays, for unit tests."""
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    p = X.shape[1]
    if types is None:
        types = ["event"] * p
    if names is None:
        names = [f"x{i}" for i in range(p)]
    columns = tuple(
        ColumnMeta(name, attr_type, name, "passthrough")
        for name, attr_type in zip(names, types)
    )
    provenance = tuple((f"case_{j}", 1) for j in range(X.shape[0]))
    return EncodedMatrix(columns, X, labels, provenance)


class StubPredictor:
    """Deterministic predictor over raw rows, used as a metric test double."""

    def __init__(self, fn, columns):
        self._fn = fn
        self.columns = tuple(columns)

    def predict(self, m):
        return np.asarray([self._fn(row) for row in m.rows], dtype=np.float64)


@pytest.fixture
def basic_schema() -> AttributeSchema:
    return AttributeSchema(
        {
            "case": "case_id",
            "act": "activity",
            "time": "timestamp",
            "outcome": "label",
            "channel": "static_categorical",
            "amount": "static_numeric",
            "resource": "dynamic_categorical",
            "cost": "dynamic_numeric",
        }
    )
