"""Cross-entropy, auxiliary cross-entropy and Jensen-Shannon consistency losses.

Losses return ``(value, grad)`` pairs where the gradient is taken with respect
to the logits, already divided by the batch size.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.special import log_softmax, softmax, xlogy

from afa.errors import InvalidLabel, InvalidParam, NotADistribution, ShapeMismatch


class LossMode(str, enum.Enum):
    ACE = "ace"
    CE_JSD = "ce_jsd"


@dataclass(frozen=True)
class LossConfig:
    mode: LossMode = LossMode.ACE
    jsd_coeff: float = 10.0

    def __post_init__(self):
        object.__setattr__(self, "mode", LossMode(self.mode))
        if self.jsd_coeff < 0:
            raise InvalidParam("jsd_coeff must be nonnegative")


def _check_labels(logits, labels):
    labels = np.asarray(labels)
    if labels.shape != (logits.shape[0],):
        raise ShapeMismatch(f"{logits.shape[0]} logit rows but labels of shape {labels.shape}")
    if np.any(labels < 0) or np.any(labels >= logits.shape[1]):
        raise InvalidLabel(f"labels must lie in [0, {logits.shape[1]})")
    return labels.astype(np.int64)


def ce_loss(logits, labels):
    """Mean negative log-likelihood of ``labels`` under softmax(logits)."""
    z = np.asarray(logits, dtype=np.float64)
    y = _check_labels(z, labels)
    n = z.shape[0]
    logp = log_softmax(z, axis=1)
    loss = -float(np.mean(logp[np.arange(n), y]))
    grad = np.exp(logp)
    grad[np.arange(n), y] -= 1.0
    return loss, grad / n


def ace_loss(logits_main, logits_aux, labels):
    """Average of the main-branch and auxiliary-branch cross-entropies.

    Returns ``(loss, grad_main, grad_aux)``.
    """
    zm = np.asarray(logits_main)
    za = np.asarray(logits_aux)
    if zm.shape != za.shape:
        raise ShapeMismatch(f"main logits {zm.shape} vs aux logits {za.shape}")
    lm, gm = ce_loss(zm, labels)
    la, ga = ce_loss(za, labels)
    return 0.5 * (lm + la), 0.5 * gm, 0.5 * ga


def _check_distribution(p, name):
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 2:
        raise ShapeMismatch(f"{name} must be N x K, got {p.shape}")
    if np.any(p < 0) or np.any(np.abs(p.sum(axis=1) - 1.0) > 1e-6):
        raise NotADistribution(f"rows of {name} must be nonnegative and sum to 1")
    return p


def jsd_loss(p_clean, p_a1, p_a2) -> float:
    """Mean over rows of the three-way Jensen-Shannon divergence."""
    ps = [_check_distribution(p, n) for p, n in ((p_clean, "p_clean"), (p_a1, "p_a1"), (p_a2, "p_a2"))]
    if not ps[0].shape == ps[1].shape == ps[2].shape:
        raise ShapeMismatch("the three distributions must share a shape")
    m = (ps[0] + ps[1] + ps[2]) / 3.0
    kl = sum(np.sum(xlogy(p, p) - xlogy(p, m), axis=1) for p in ps)
    return float(np.mean(kl / 3.0))


def jsd_from_logits(z_clean, z_a1, z_a2):
    """JSD of the softmaxes of three logit sets, with gradients for each set."""
    zs = [np.asarray(z, dtype=np.float64) for z in (z_clean, z_a1, z_a2)]
    if not zs[0].shape == zs[1].shape == zs[2].shape:
        raise ShapeMismatch("the three logit sets must share a shape")
    n = zs[0].shape[0]
    ps = [softmax(z, axis=1) for z in zs]
    m = (ps[0] + ps[1] + ps[2]) / 3.0
    # per-entry p * (log p - log m); zero wherever p is zero
    terms = [xlogy(p, p) - xlogy(p, m) for p in ps]
    loss = float(np.mean(sum(t.sum(axis=1) for t in terms) / 3.0))
    # dJSD/dp_k = (log p_k - log m) / 3; chain through softmax: p * (g - <p, g>)
    grads = [(t - p * t.sum(axis=1, keepdims=True)) / (3.0 * n) for p, t in zip(ps, terms)]
    return loss, grads


def ce_jsd_loss(z_clean, z_a1, z_a2, labels, jsd_coeff: float):
    """``CE(clean) + jsd_coeff * JSD(clean, a1, a2)`` with gradients for all three."""
    ce, g_clean = ce_loss(z_clean, labels)
    jsd, (j0, j1, j2) = jsd_from_logits(z_clean, z_a1, z_a2)
    return ce + jsd_coeff * jsd, g_clean + jsd_coeff * j0, jsd_coeff * j1, jsd_coeff * j2
