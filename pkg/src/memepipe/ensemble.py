"""K-fold planning, equal-weight stacking, and prediction file IO.

Prediction files are CSV with header `id,proba`; submissions add a `label`
column.  Probabilities are written with nine decimal places so a round trip
stays within 1e-9.
"""

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import PredictionFormatError
from .rules import PredictionSet


@dataclass
class KFoldPlan:
    k: int
    folds: list  # list of (train_indices, val_indices)


def kfold(n, k, shuffle_seed=None):
    """Split indices 0..n-1 into k validation folds.

    Folds are consecutive ranges (the first n % k folds get the extra
    element) unless a shuffle seed permutes the order first.  Every index
    appears in exactly one validation fold.
    """
    if not 2 <= k <= n:
        raise ValueError(f"need 2 <= k <= n, got k={k} n={n}")
    order = list(range(n))
    if shuffle_seed is not None:
        order = np.random.default_rng(shuffle_seed).permutation(n).tolist()
    sizes = [n // k + (1 if i < n % k else 0) for i in range(k)]
    folds = []
    start = 0
    for size in sizes:
        val = order[start:start + size]
        train = order[:start] + order[start + size:]
        folds.append((train, val))
        start += size
    return KFoldPlan(k, folds)


@dataclass
class StackedPrediction:
    mean_score: dict
    label: dict
    source_count: int


def stack_equal_weight(sets):
    """Average prediction sets with equal weight; label 1 iff mean >= 0.5.

    All sets must cover exactly the same ids.  The mean uses exact float
    summation, so reordering the sets cannot change the result.
    """
    if not sets:
        raise ValueError("need at least one prediction set")
    ids = set(sets[0].scores)
    for ps in sets[1:]:
        if set(ps.scores) != ids:
            missing = ids.symmetric_difference(ps.scores)
            sample = sorted(missing)[:5]
            raise ValueError(f"prediction sets disagree on ids, e.g. {sample}")
    mean_score = {}
    label = {}
    for meme_id in ids:
        mean = math.fsum(ps.scores[meme_id] for ps in sets) / len(sets)
        mean_score[meme_id] = mean
        label[meme_id] = 1 if mean >= 0.5 else 0
    return StackedPrediction(mean_score, label, len(sets))


def write_predictions(preds, path):
    """Write a prediction set as `id,proba` CSV, sorted by id."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("id,proba\n")
        for meme_id in sorted(preds.scores):
            fh.write(f"{meme_id},{preds.scores[meme_id]:.9f}\n")


def read_predictions(path):
    """Parse an `id,proba` CSV; the model id is the file stem."""
    path = Path(path)
    scores = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "id,proba":
            raise PredictionFormatError(f"{path}: expected header 'id,proba', got {header!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise PredictionFormatError(f"{path}: line {lineno}: expected id,proba")
            try:
                meme_id = int(parts[0])
                proba = float(parts[1])
            except ValueError:
                raise PredictionFormatError(
                    f"{path}: line {lineno}: malformed row {line!r}") from None
            if not 0.0 <= proba <= 1.0:
                raise PredictionFormatError(
                    f"{path}: line {lineno}: probability {proba} outside [0, 1]")
            if meme_id in scores:
                raise PredictionFormatError(f"{path}: line {lineno}: duplicate id {meme_id}")
            scores[meme_id] = proba
    return PredictionSet(path.stem, scores)


def write_submission(stacked, path, ids=None):
    """Write `id,proba,label` rows for the given ids (default: all), sorted."""
    keep = sorted(stacked.mean_score) if ids is None else sorted(ids)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("id,proba,label\n")
        for meme_id in keep:
            fh.write(f"{meme_id},{stacked.mean_score[meme_id]:.9f},"
                     f"{stacked.label[meme_id]}\n")


def read_submission(path):
    """Parse a submission into (scores, labels) keyed by id."""
    scores = {}
    labels = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "id,proba,label":
            raise PredictionFormatError(
                f"{path}: expected header 'id,proba,label', got {header!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise PredictionFormatError(f"{path}: line {lineno}: expected id,proba,label")
            try:
                meme_id = int(parts[0])
                proba = float(parts[1])
                label = int(parts[2])
            except ValueError:
                raise PredictionFormatError(
                    f"{path}: line {lineno}: malformed row {line!r}") from None
            if not 0.0 <= proba <= 1.0 or label not in (0, 1):
                raise PredictionFormatError(f"{path}: line {lineno}: values out of range")
            if meme_id in scores:
                raise PredictionFormatError(f"{path}: line {lineno}: duplicate id {meme_id}")
            scores[meme_id] = proba
            labels[meme_id] = label
    return scores, labels
