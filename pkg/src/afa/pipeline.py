"""End-to-end runs: train from a config, evaluate robustness, write reports."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from afa import __version__
from afa.config import RunConfig
from afa.data import synth_dataset
from afa.errors import BaselineDegenerate
from afa.nn.checkpoint import save_checkpoint
from afa.nn.model import Model
from afa.nn.optim import SGD
from afa.nn.train import accuracy, train
from afa.robustness.corruptions import all_specs, generate_corruptions, make_sequences
from afa.robustness.metrics import (
    CorruptionErrorTable,
    classification_error,
    corruption_error,
    flip_prob,
    mce,
    mfr,
    mt5d,
    robust_accuracy,
    t5d,
)
from afa.tensor_core import Rng

log = logging.getLogger(__name__)


def write_run_metadata(out_dir, cfg: RunConfig | None = None) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "VERSION").write_text(f"afa {__version__}\n")
    if cfg is not None:
        (out_dir / "config.resolved").write_text(cfg.to_text())


def train_from_config(cfg: RunConfig, callback=None):
    """Build the toy data and model described by ``cfg`` and train it."""
    train_set, test_set = synth_dataset(cfg.synthetic_spec())
    model = Model(cfg.model_spec(), seed=cfg.seed)
    optim = SGD.for_model(
        model,
        lr=cfg.optim_lr,
        momentum=cfg.optim_momentum,
        nesterov=cfg.optim_nesterov,
        weight_decay=cfg.optim_weight_decay,
    )
    history = train(
        model,
        train_set,
        cfg.afa_config(),
        cfg.visual_config(),
        cfg.loss_config(),
        optim,
        Rng(cfg.seed).child("train"),
        cfg.epochs,
        setting=cfg.train_setting,
        batch_size=cfg.train_batch_size,
        callback=callback,
    )
    return model, history, test_set


def run_train(cfg: RunConfig, out_dir) -> Model:
    """Train and write ``checkpoint/``, ``epochs.csv`` and run metadata."""
    out_dir = Path(out_dir)
    write_run_metadata(out_dir, cfg)
    model, history, test_set = train_from_config(
        cfg, callback=lambda s: log.info("epoch %d loss %.4f acc %.4f", s.epoch, s.loss, s.accuracy)
    )
    save_checkpoint(model, out_dir / "checkpoint")
    with open(out_dir / "epochs.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "loss", "accuracy"])
        for s in history:
            w.writerow([s.epoch, f"{s.loss:.10g}", f"{s.accuracy:.10g}"])
        w.writerow(["test", "", f"{accuracy(model, test_set.images, test_set.labels):.10g}"])
    return model


@dataclass
class EvalData:
    """Everything needed to score a model; shared when comparing models."""

    images: np.ndarray
    labels: np.ndarray
    family: dict
    sequences: dict = field(default_factory=dict)


def build_eval_data(cfg: RunConfig) -> EvalData:
    _, test_set = synth_dataset(cfg.synthetic_spec())
    rng = Rng(cfg.seed).child("eval")
    family = generate_corruptions(test_set, all_specs(cfg.eval_kinds), rng.child("corruptions"))
    count = min(cfg.eval_seq_images, len(test_set))
    # evenly spaced so every class appears
    pick = np.linspace(0, len(test_set) - 1, count).round().astype(int)
    sequences = {
        kind: make_sequences(test_set.images[pick], kind, cfg.eval_seq_frames, rng.child("sequences"))
        for kind in cfg.eval_kinds
    }
    return EvalData(test_set.images, test_set.labels, family, sequences)


@dataclass
class ModelScores:
    table: CorruptionErrorTable
    fp: dict
    t5d: dict


def score_model(model, data: EvalData) -> ModelScores:
    table = corruption_error(model, data.family, data.labels, clean_images=data.images)
    fp = {k: flip_prob(model, seq) for k, seq in data.sequences.items()}
    num_classes = model.logits(data.images[:1]).shape[1]
    t5 = {k: t5d(model, seq) for k, seq in data.sequences.items()} if num_classes >= 5 else {}
    return ModelScores(table, fp, t5)


def _guarded(fn, *args) -> float:
    try:
        return fn(*args)
    except BaselineDegenerate as exc:
        log.warning("%s", exc)
        return math.nan


def summarize(scores: ModelScores, baseline: ModelScores) -> dict:
    summary = {
        "SA": 100.0 * (1.0 - scores.table.clean_error),
        "RA": robust_accuracy(scores.table),
        "mCE": _guarded(mce, scores.table, baseline.table),
        "mFR": _guarded(mfr, scores.fp, baseline.fp),
    }
    if scores.t5d:
        summary["mT5D"] = _guarded(mt5d, scores.t5d, baseline.t5d)
    return summary


def write_metrics_csv(path, scores: ModelScores, summary: dict) -> None:
    """Rows ``metric,kind,severity,value``; summary rows use kind ``all``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["metric", "kind", "severity", "value"])
        w.writerow(["error", "clean", "", f"{scores.table.clean_error:.10g}"])
        for (kind, s), e in sorted(scores.table.errors.items()):
            w.writerow(["error", kind, s, f"{e:.10g}"])
        for kind, v in sorted(scores.fp.items()):
            w.writerow(["FP", kind, "", f"{v:.10g}"])
        for kind, v in sorted(scores.t5d.items()):
            w.writerow(["T5D", kind, "", f"{v:.10g}"])
        for name, v in summary.items():
            w.writerow([name, "all", "", f"{v:.10g}"])


def run_eval(model, cfg: RunConfig, out_dir, baseline=None) -> dict:
    """Score ``model`` (against ``baseline``, itself by default) and write reports."""
    out_dir = Path(out_dir)
    write_run_metadata(out_dir, cfg)
    data = build_eval_data(cfg)
    scores = score_model(model, data)
    base_scores = scores if baseline is None else score_model(baseline, data)
    summary = summarize(scores, base_scores)
    write_metrics_csv(out_dir / "metrics.csv", scores, summary)
    return summary


def clean_error(model, data: EvalData) -> float:
    return classification_error(model, data.images, data.labels)
