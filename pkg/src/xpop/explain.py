"""Attribute weight sources: permutation importance, intrinsic model
weights, and external weight files.

All downstream metrics consume weight magnitudes, so signed coefficients
are collapsed to absolute values at the source.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from xpop.models import ConstantLeaf, TrainedModel, _tree_leaf_ids, iter_leaves
from xpop.preprocess import EncodedMatrix


@dataclass(frozen=True)
class WeightVector:
    weights: np.ndarray
    columns: tuple[str, ...]
    source: str
    seed: Optional[int] = None
    repeats: Optional[int] = None

    def __post_init__(self) -> None:
        if len(self.weights) != len(self.columns):
            raise ValueError("weight length must equal the column signature length")
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("weights must be finite")
        self.weights.setflags(write=False)


def permute_column(
    values: np.ndarray, distinct: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Replace each value by a uniform draw from the other distinct values.

    Columns with a single distinct value are returned unchanged.
    """
    k = len(distinct)
    if k < 2:
        return values.copy()
    positions = np.searchsorted(distinct, values)
    draws = rng.integers(0, k - 1, size=len(values))
    draws = np.where(draws >= positions, draws + 1, draws)  # skip the current value
    return distinct[draws]


def _mse(labels: np.ndarray, scores: np.ndarray) -> float:
    return float(np.mean((labels - scores) ** 2))


def permutation_importance(
    predictor,
    m: EncodedMatrix,
    labels: np.ndarray,
    seed: int,
    repeats: int = 1,
) -> WeightVector:
    """Per-column change in MSE after an excluded-value permutation.

    The draw for each row excludes the row's current value; the effect is
    averaged over `repeats` independent permutations. Per-column seeds are
    derived as seed + column index, so columns can run in parallel.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    y = np.asarray(labels, dtype=np.float64)
    if len(np.unique(y)) < 2:
        raise ValueError("labels contain a single class")
    if getattr(predictor, "columns", m.column_names) != m.column_names:
        raise ValueError("column signature mismatch between predictor and matrix")
    base = _mse(y, np.asarray(predictor.predict(m), dtype=np.float64))
    weights = np.zeros(m.n_columns)
    for i in range(m.n_columns):
        distinct = np.unique(m.rows[:, i])
        if len(distinct) < 2:
            continue
        rng = np.random.default_rng(seed + i)
        total = 0.0
        for _ in range(repeats):
            rows = m.rows.copy()
            rows[:, i] = permute_column(m.rows[:, i], distinct, rng)
            permuted = np.asarray(predictor.predict(m.with_rows(rows)), dtype=np.float64)
            total += _mse(y, permuted) - base
        weights[i] = total / repeats
    return WeightVector(weights, m.column_names, "permutation", seed=seed, repeats=repeats)


def coefficient_weights(model: TrainedModel) -> WeightVector:
    """Absolute coefficients (scaled space); the logit leaf model reports a
    support-weighted mean over leaves, constant leaves contributing zero."""
    if model.kind == "logreg":
        return WeightVector(np.abs(model.logreg.coef), model.columns, "coefficients")
    if model.kind == "llm":
        p = len(model.columns)
        total = np.zeros(p)
        support = 0
        for leaf in iter_leaves(model.tree):
            leaf_model = model.leaf_models[leaf.leaf_id]
            if not isinstance(leaf_model, ConstantLeaf):
                total += leaf.n * np.abs(leaf_model.coef)
            support += leaf.n
        return WeightVector(total / support, model.columns, "coefficients")
    raise ValueError(f"coefficient weights undefined for model kind {model.kind!r}")


def _accumulate_impurity(node, total_n: int, out: np.ndarray) -> None:
    if node.is_leaf:
        return
    child_gini = (
        node.left.n / node.n * node.left.gini + node.right.n / node.n * node.right.gini
    )
    out[node.column] += node.n / total_n * (node.gini - child_gini)
    _accumulate_impurity(node.left, total_n, out)
    _accumulate_impurity(node.right, total_n, out)


def impurity_weights(model: TrainedModel) -> WeightVector:
    """Total Gini impurity decrease per column, node-fraction weighted;
    forests average over member trees."""
    p = len(model.columns)
    if model.kind == "tree":
        out = np.zeros(p)
        _accumulate_impurity(model.tree, model.tree.n, out)
        return WeightVector(out, model.columns, "impurity")
    if model.kind == "forest":
        out = np.zeros(p)
        for tree in model.trees:
            _accumulate_impurity(tree, tree.n, out)
        return WeightVector(out / len(model.trees), model.columns, "impurity")
    raise ValueError(f"impurity weights undefined for model kind {model.kind!r}")


def load_external_weights(path: str, signature: Sequence[str]) -> WeightVector:
    """Align an ``attribute,weight`` CSV to a column signature.

    Signature columns absent from the file get weight 0 (with a warning);
    file columns absent from the signature are an error.
    """
    signature = tuple(signature)
    index = {name: i for i, name in enumerate(signature)}
    weights = np.zeros(len(signature))
    seen = set()
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            if len(row) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'attribute,weight'")
            name, raw = row[0], row[1]
            if name not in index:
                raise ValueError(f"{path}:{lineno}: unknown column {name!r}")
            try:
                value = float(raw)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric weight {raw!r}") from None
            if not np.isfinite(value):
                raise ValueError(f"{path}:{lineno}: non-finite weight for {name!r}")
            weights[index[name]] = abs(value)
            seen.add(name)
    absent = [name for name in signature if name not in seen]
    if absent:
        warnings.warn(
            f"{len(absent)} signature columns missing from {path}; weights set to 0",
            stacklevel=2,
        )
    return WeightVector(weights, signature, "external")
