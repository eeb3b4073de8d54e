"""Post-training diagnostics: branch divergence of norm affines, kernel norms."""

from __future__ import annotations

import numpy as np

from afa.errors import InvalidParam
from afa.nn.layers import Branch


def bn_divergence_report(model) -> list[tuple[str, float, float]]:
    """``(layer, weight MAD, bias MAD)`` between MAIN and AUX affines, by depth."""
    layers = model.norm_layers
    if not layers:
        raise InvalidParam("model has no dual-norm layers")
    report = []
    for layer in layers:
        p = model.params
        g = np.mean(np.abs(p[layer.key(Branch.MAIN, "gamma")] - p[layer.key(Branch.AUX, "gamma")]))
        b = np.mean(np.abs(p[layer.key(Branch.MAIN, "beta")] - p[layer.key(Branch.AUX, "beta")]))
        report.append((layer.name, float(g), float(b)))
    return report


def weight_norm_report(model) -> list[tuple[int, float]]:
    """``(depth, l2 norm of the kernel)`` for each conv layer, depth counted from 1."""
    return [
        (depth, float(np.linalg.norm(model.params[layer.weight].astype(np.float64))))
        for depth, layer in enumerate(model.conv_layers, start=1)
    ]
