"""Corruption error tables, mCE, robust accuracy, flip rates and top-5 distances.

A "model" here is anything with a ``logits(images)`` method returning N x K
evaluation-mode scores (:class:`afa.nn.model.Model` qualifies), or a plain
callable with that signature.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from afa.errors import (
    BaselineDegenerate,
    EmptySplit,
    InvalidParam,
    NotEnoughClasses,
    SequenceTooShort,
    ShapeMismatch,
)


def model_logits(model, images) -> np.ndarray:
    fn = model.logits if hasattr(model, "logits") else model
    return np.asarray(fn(images))


def model_predict(model, images) -> np.ndarray:
    return np.argmax(model_logits(model, images), axis=1)


@dataclass(frozen=True)
class CorruptionErrorTable:
    errors: dict  # (kind, severity) -> error in [0, 1]
    clean_error: float | None = None

    def __post_init__(self):
        kinds = self.kinds
        for kind in kinds:
            for s in range(1, 6):
                if (kind, s) not in self.errors:
                    raise InvalidParam(f"error table is missing ({kind}, {s})")
        if len(self.errors) != 5 * len(kinds):
            raise InvalidParam("error table severities must be exactly 1..5")
        values = list(self.errors.values()) + ([self.clean_error] if self.clean_error is not None else [])
        if any(not 0.0 <= e <= 1.0 for e in values):
            raise InvalidParam("classification errors must lie in [0, 1]")

    @property
    def kinds(self) -> list[str]:
        return sorted({k for k, _ in self.errors})

    def severity_sum(self, kind: str) -> float:
        return float(sum(self.errors[(kind, s)] for s in range(1, 6)))


def classification_error(model, images, labels) -> float:
    labels = np.asarray(labels)
    if len(labels) == 0:
        raise EmptySplit("cannot evaluate an empty split")
    return float(np.mean(model_predict(model, images) != labels))


def corruption_error(model, family: dict, labels, clean_images=None) -> CorruptionErrorTable:
    """Error of ``model`` on every ``(kind, severity)`` split of ``family``."""
    errors = {key: classification_error(model, imgs, labels) for key, imgs in sorted(family.items())}
    clean = classification_error(model, clean_images, labels) if clean_images is not None else None
    return CorruptionErrorTable(errors, clean)


def mce(table_f: CorruptionErrorTable, table_baseline: CorruptionErrorTable) -> float:
    """Mean over corruptions of severity-summed error relative to a baseline, in percent."""
    if set(table_f.errors) != set(table_baseline.errors):
        raise ShapeMismatch("model and baseline tables cover different (kind, severity) grids")
    ratios = []
    for kind in table_f.kinds:
        base = table_baseline.severity_sum(kind)
        if base <= 0:
            raise BaselineDegenerate(f"baseline makes no errors on {kind}")
        ratios.append(table_f.severity_sum(kind) / base)
    return 100.0 * float(np.mean(ratios))


def robust_accuracy(table: CorruptionErrorTable) -> float:
    """Accuracy averaged over every corruption and severity, in percent."""
    return 100.0 * float(np.mean([1.0 - e for e in table.errors.values()]))


# ---------------------------------------------------------------------------
# Flip probability
# ---------------------------------------------------------------------------


def flip_prob_from_predictions(preds, temporally_related: bool) -> float:
    """Fraction of frames j >= 2 whose prediction differs from the reference.

    The reference is the previous frame for related sequences and the first
    frame for independent-noise sequences.
    """
    preds = np.asarray(preds)
    if preds.ndim != 2:
        raise ShapeMismatch(f"predictions must be m x n, got {preds.shape}")
    if preds.shape[1] < 2:
        raise SequenceTooShort("flip probability needs n >= 2 frames")
    ref = preds[:, :-1] if temporally_related else preds[:, :1]
    return float(np.mean(preds[:, 1:] != ref))


def _sequence_outputs(model, seq):
    m, n = seq.frames.shape[:2]
    return model_logits(model, seq.frames.reshape((m * n,) + seq.frames.shape[2:])).reshape(m, n, -1)


def flip_prob(model, seq) -> float:
    preds = np.argmax(_sequence_outputs(model, seq), axis=2)
    return flip_prob_from_predictions(preds, seq.temporally_related)


def _normalized_mean(values_f: dict, values_baseline: dict, what: str) -> float:
    if set(values_f) != set(values_baseline):
        raise ShapeMismatch(f"model and baseline {what} cover different kinds")
    if not values_f:
        raise EmptySplit(f"no {what} values")
    ratios = []
    for kind in sorted(values_f):
        base = values_baseline[kind]
        if base <= 0:
            raise BaselineDegenerate(f"baseline {what} is zero on {kind}")
        ratios.append(values_f[kind] / base)
    return float(np.mean(ratios))


def mfr(fp_f: dict, fp_baseline: dict) -> float:
    """Mean over kinds of the flip probability relative to a baseline."""
    return _normalized_mean(fp_f, fp_baseline, "flip probability")


# ---------------------------------------------------------------------------
# Top-5 distance
# ---------------------------------------------------------------------------


def rankings_from_scores(scores) -> np.ndarray:
    """Labels ordered by descending score (ties keep label order)."""
    return np.argsort(-np.asarray(scores), axis=-1, kind="stable")


def top5_distances(ranking_now, ranking_prev) -> np.ndarray:
    """Top-5 displacement between full rankings, vectorized over leading axes.

    For rank ``i`` in 1..5 of the current frame let ``rho(i)`` be the rank
    the same label held in the previous frame; the pair contributes the number
    of integers ``j`` in ``(min(i, rho), max(i, rho)]`` with ``2 <= j <= 6``.
    """
    now = np.asarray(ranking_now)
    prev = np.asarray(ranking_prev)
    if now.shape != prev.shape:
        raise ShapeMismatch("rankings must share a shape")
    if now.shape[-1] < 5:
        raise NotEnoughClasses("top-5 distance needs at least 5 classes")
    pos_prev = np.argsort(prev, axis=-1)  # label -> 0-based rank
    i = np.arange(1, 6)
    rho = np.take_along_axis(pos_prev, now[..., :5], axis=-1) + 1
    lo = np.minimum(i, rho)
    hi = np.minimum(np.maximum(i, rho), 6)
    return np.maximum(hi - lo, 0).sum(axis=-1)


def t5d_from_rankings(rankings) -> float:
    """Mean top-5 distance between consecutive frames of m x n x K rankings."""
    rankings = np.asarray(rankings)
    if rankings.ndim != 3:
        raise ShapeMismatch(f"rankings must be m x n x K, got {rankings.shape}")
    if rankings.shape[1] < 2:
        raise SequenceTooShort("top-5 distance needs n >= 2 frames")
    return float(np.mean(top5_distances(rankings[:, 1:], rankings[:, :-1])))


def t5d(model, seq) -> float:
    scores = _sequence_outputs(model, seq)
    if scores.shape[-1] < 5:
        raise NotEnoughClasses("top-5 distance needs at least 5 classes")
    return t5d_from_rankings(rankings_from_scores(scores))


def mt5d(t5d_f: dict, t5d_baseline: dict) -> float:
    """Mean over kinds of the top-5 distance relative to a baseline."""
    return _normalized_mean(t5d_f, t5d_baseline, "top-5 distance")
