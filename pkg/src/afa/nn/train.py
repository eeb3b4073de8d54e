"""Training loops for the three settings compared in the robustness study.

``standard``  visually augmented images, CE, MAIN branch only.
``afa_main``  AFA applied on top of the visual augmentation, CE, MAIN branch
              (no auxiliary components).
``afa_aux``   visually augmented images through MAIN and AFA images through
              AUX, optimised with ACE (or CE + JSD consistency).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from afa.augment import AfaConfig, VisualAugConfig, afa_augment_batch, standard_visual_aug_batch
from afa.errors import EmptySplit, InvalidParam
from afa.nn.layers import Branch
from afa.nn.losses import LossConfig, LossMode, ace_loss, ce_jsd_loss, ce_loss

SETTINGS = ("standard", "afa_main", "afa_aux")


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    loss: float
    accuracy: float
    batches: int


def _batches(order: np.ndarray, batch_size: int):
    # a trailing batch of one cannot provide batch statistics
    stops = list(range(batch_size, len(order), batch_size)) + [len(order)]
    start = 0
    for stop in stops:
        if stop - start < 2:
            break
        yield order[start:stop]
        start = stop


def _add(total, grads):
    if total is None:
        return grads
    for k, v in grads.items():
        total[k] += v
    return total


def train_epoch(
    model,
    dataset,
    afa_cfg: AfaConfig,
    visual_cfg: VisualAugConfig,
    loss_cfg: LossConfig,
    optim,
    rng,
    setting: str = "afa_aux",
    batch_size: int = 32,
    epoch: int = 0,
) -> EpochStats:
    """One pass over ``dataset``; every random choice comes from ``rng``.

    Each image draws its augmentations from its own child stream keyed by the
    dataset index, so results do not depend on batch boundaries.
    """
    if len(dataset) == 0:
        raise EmptySplit("cannot train on an empty dataset")
    if setting not in SETTINGS:
        raise InvalidParam(f"unknown training setting {setting!r}")
    if batch_size < 2:
        raise InvalidParam("batch_size must be >= 2")
    order = rng.child("shuffle").permutation(len(dataset))
    total_loss, correct, seen, nb = 0.0, 0, 0, 0
    for idx in _batches(order, batch_size):
        x, y = dataset.images[idx], dataset.labels[idx]
        x_vis = standard_visual_aug_batch(x, visual_cfg, [rng.child("visual", int(i)) for i in idx])
        if setting == "standard":
            z = model.forward(x_vis, Branch.MAIN, training=True)
            loss, g = ce_loss(z, y)
            grads = model.backward(g)
        elif setting == "afa_main":
            x_afa = afa_augment_batch(x_vis, afa_cfg, [rng.child("afa", int(i)) for i in idx])
            z = model.forward(x_afa, Branch.MAIN, training=True)
            loss, g = ce_loss(z, y)
            grads = model.backward(g)
        elif loss_cfg.mode is LossMode.ACE:
            x_afa = afa_augment_batch(x, afa_cfg, [rng.child("afa", int(i)) for i in idx])
            z = model.forward(x_vis, Branch.MAIN, training=True)
            tape_main = model.tape
            z_aux = model.forward(x_afa, Branch.AUX, training=True)
            tape_aux = model.tape
            loss, g_main, g_aux = ace_loss(z, z_aux, y)
            grads = _add(model.backward(g_main, tape_main), model.backward(g_aux, tape_aux))
        else:
            a1 = afa_augment_batch(x_vis, afa_cfg, [rng.child("afa", int(i)) for i in idx])
            a2 = afa_augment_batch(x_vis, afa_cfg, [rng.child("afa2", int(i)) for i in idx])
            z = model.forward(x_vis, Branch.MAIN, training=True)
            tape_main = model.tape
            # both AFA views share one auxiliary batch
            z_aux = model.forward(np.concatenate([a1, a2]), Branch.AUX, training=True)
            tape_aux = model.tape
            n = len(idx)
            loss, g0, g1, g2 = ce_jsd_loss(z, z_aux[:n], z_aux[n:], y, loss_cfg.jsd_coeff)
            grads = _add(model.backward(g0, tape_main), model.backward(np.concatenate([g1, g2]), tape_aux))
        model.tape = None
        optim.step(model.params, grads)
        total_loss += loss * len(idx)
        correct += int(np.sum(np.argmax(z, axis=1) == y))
        seen += len(idx)
        nb += 1
    return EpochStats(epoch, total_loss / seen, correct / seen, nb)


def train(
    model,
    dataset,
    afa_cfg: AfaConfig,
    visual_cfg: VisualAugConfig,
    loss_cfg: LossConfig,
    optim,
    rng,
    epochs: int,
    setting: str = "afa_aux",
    batch_size: int = 32,
    lr_schedule=None,
    callback=None,
) -> list[EpochStats]:
    """Run ``epochs`` epochs; ``lr_schedule(epoch) -> lr`` overrides the constant rate."""
    history = []
    for epoch in range(epochs):
        if lr_schedule is not None:
            optim.lr = lr_schedule(epoch)
        stats = train_epoch(
            model, dataset, afa_cfg, visual_cfg, loss_cfg, optim, rng.child("epoch", epoch),
            setting=setting, batch_size=batch_size, epoch=epoch,
        )
        history.append(stats)
        if callback is not None:
            callback(stats)
    return history


def accuracy(model, images, labels, batch_size: int = 512) -> float:
    if len(labels) == 0:
        raise EmptySplit("cannot evaluate on an empty split")
    return float(np.mean(model.predict(images, batch_size) == np.asarray(labels)))
