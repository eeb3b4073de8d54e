"""Literal, loop-based reference implementations used to cross-check fast paths.

Nothing here is vectorized on purpose: each function transcribes its formula
index by index (1-based where the formula is) so it can be read against the
definition.
"""

from __future__ import annotations

import numpy as np


def flip_prob_literal(preds, temporally_related: bool) -> float:
    """FP = 1/(m(n-1)) sum_i sum_{j=2..n} [pred_j != ref_j]."""
    preds = [list(row) for row in np.asarray(preds)]
    m, n = len(preds), len(preds[0])
    total = 0
    for i in range(1, m + 1):
        for j in range(2, n + 1):
            ref = preds[i - 1][j - 2] if temporally_related else preds[i - 1][0]
            if preds[i - 1][j - 1] != ref:
                total += 1
    return total / (m * (n - 1))


def top5_distance_literal(tau_now, tau_prev) -> int:
    """d = sum_{i=1..5} sum_{j=min(i,rho(i))+1}^{max(i,rho(i))} [1 <= j-1 <= 5].

    ``tau`` lists labels by rank (rank 1 first); ``rho(i)`` is the rank that
    the label at rank ``i`` of the current frame held in the previous frame.
    """
    tau_now, tau_prev = list(tau_now), list(tau_prev)
    d = 0
    for i in range(1, 6):
        label = tau_now[i - 1]
        rho = tau_prev.index(label) + 1
        for j in range(min(i, rho) + 1, max(i, rho) + 1):
            if 1 <= j - 1 <= 5:
                d += 1
    return d


def t5d_literal(rankings) -> float:
    """T5D = 1/(m(n-1)) sum_i sum_{j=2..n} d(tau(x_j), tau(x_{j-1}))."""
    rankings = np.asarray(rankings)
    m, n = rankings.shape[:2]
    total = 0
    for i in range(1, m + 1):
        for j in range(2, n + 1):
            total += top5_distance_literal(rankings[i - 1, j - 1], rankings[i - 1, j - 2])
    return total / (m * (n - 1))


def mce_literal(errors_f: dict, errors_baseline: dict, kinds) -> float:
    total = 0.0
    for c in kinds:
        num = sum(errors_f[(c, s)] for s in range(1, 6))
        den = sum(errors_baseline[(c, s)] for s in range(1, 6))
        total += num / den
    return 100.0 * total / len(kinds)


def central_difference(fn, arr: np.ndarray, index, h: float = 1e-5) -> float:
    """d fn / d arr[index] by a symmetric difference; restores ``arr`` afterwards."""
    old = arr[index]
    arr[index] = old + h
    plus = fn()
    arr[index] = old - h
    minus = fn()
    arr[index] = old
    return (plus - minus) / (2 * h)
