"""Layers with hand-written backward passes.

Every layer reads its parameters from a shared ``params`` dict (and running
statistics from ``buffers``) under a fixed name prefix, so a model's whole
state is two flat name -> array mappings.  ``forward`` returns ``(out, cache)``;
``backward`` consumes the cache and returns ``(dx, grads)``.
"""

from __future__ import annotations

import enum

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class Branch(str, enum.Enum):
    MAIN = "main"
    AUX = "aux"


class Conv2d:
    """Bias-free 2-D convolution (cross-correlation) with zero padding."""

    kind = "conv"

    def __init__(self, name, in_ch, out_ch, kernel=3, stride=1, padding=None):
        self.name = name
        self.in_ch, self.out_ch = in_ch, out_ch
        self.kernel, self.stride = kernel, stride
        self.padding = kernel // 2 if padding is None else padding
        self.weight = f"{name}.weight"

    def param_shapes(self):
        return {self.weight: (self.out_ch, self.in_ch, self.kernel, self.kernel)}

    def out_size(self, h):
        return (h + 2 * self.padding - self.kernel) // self.stride + 1

    def forward(self, x, params, buffers, branch, training):
        w = params[self.weight]
        k, s, p = self.kernel, self.stride, self.padding
        n, c, h, wd = x.shape
        xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p))) if p else x
        win = sliding_window_view(xp, (k, k), axis=(2, 3))[:, :, ::s, ::s]
        ho, wo = win.shape[2], win.shape[3]
        cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(n * ho * wo, c * k * k)
        out = cols @ w.reshape(self.out_ch, -1).T
        out = out.reshape(n, ho, wo, self.out_ch).transpose(0, 3, 1, 2)
        return np.ascontiguousarray(out), (cols, x.shape, ho, wo)

    def backward(self, dout, cache, params):
        cols, (n, c, h, wd), ho, wo = cache
        w = params[self.weight]
        k, s, p = self.kernel, self.stride, self.padding
        d2 = dout.transpose(0, 2, 3, 1).reshape(-1, self.out_ch)
        dw = (d2.T @ cols).reshape(w.shape)
        dcols = (d2 @ w.reshape(self.out_ch, -1)).reshape(n, ho, wo, c, k, k)
        dxp = np.zeros((n, c, h + 2 * p, wd + 2 * p), dtype=dout.dtype)
        for i in range(k):
            for j in range(k):
                dxp[:, :, i:i + s * ho:s, j:j + s * wo:s] += dcols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
        dx = dxp[:, :, p:p + h, p:p + wd] if p else dxp
        return dx, {self.weight: dw}


class DualNorm:
    """Batch normalization with two independent statistic/affine sets.

    A training pass tagged with a branch normalizes by batch statistics and
    updates only that branch's running mean/variance.  Evaluation always uses
    the MAIN set, whatever branch is requested.
    """

    kind = "norm"

    def __init__(self, name, channels, momentum=0.1, eps=1e-5):
        self.name = name
        self.channels = channels
        self.momentum, self.eps = momentum, eps

    def key(self, branch, field):
        return f"{self.name}.{Branch(branch).value}.{field}"

    def param_shapes(self):
        return {self.key(b, f): (self.channels,) for b in Branch for f in ("gamma", "beta")}

    def buffer_shapes(self):
        return {self.key(b, f): (self.channels,) for b in Branch for f in ("mean", "var")}

    def affine_names(self):
        return list(self.param_shapes())

    def forward(self, x, params, buffers, branch, training):
        if not training:
            branch = Branch.MAIN
        gamma = params[self.key(branch, "gamma")][None, :, None, None]
        beta = params[self.key(branch, "beta")][None, :, None, None]
        if training:
            count = x.shape[0] * x.shape[2] * x.shape[3]
            mean = x.mean(axis=(0, 2, 3))
            var = x.var(axis=(0, 2, 3))
            rm, rv = self.key(branch, "mean"), self.key(branch, "var")
            m = self.momentum
            buffers[rm] = ((1 - m) * buffers[rm] + m * mean).astype(buffers[rm].dtype)
            buffers[rv] = ((1 - m) * buffers[rv] + m * var * count / (count - 1)).astype(buffers[rv].dtype)
        else:
            mean = buffers[self.key(branch, "mean")]
            var = buffers[self.key(branch, "var")]
        inv_std = (1.0 / np.sqrt(var + self.eps)).astype(x.dtype)
        xhat = (x - mean.astype(x.dtype)[None, :, None, None]) * inv_std[None, :, None, None]
        return gamma * xhat + beta, (xhat, inv_std, branch, training)

    def backward(self, dout, cache, params):
        xhat, inv_std, branch, training = cache
        gamma = params[self.key(branch, "gamma")]
        grads = {
            self.key(branch, "gamma"): np.sum(dout * xhat, axis=(0, 2, 3)),
            self.key(branch, "beta"): np.sum(dout, axis=(0, 2, 3)),
        }
        dxhat = dout * gamma[None, :, None, None]
        if training:
            count = dout.shape[0] * dout.shape[2] * dout.shape[3]
            s1 = dxhat.sum(axis=(0, 2, 3))[None, :, None, None]
            s2 = (dxhat * xhat).sum(axis=(0, 2, 3))[None, :, None, None]
            dx = (count * dxhat - s1 - xhat * s2) * (inv_std[None, :, None, None] / count)
        else:
            dx = dxhat * inv_std[None, :, None, None]
        return dx, grads


class ReLU:
    kind = "relu"

    def __init__(self, name):
        self.name = name

    def forward(self, x, params, buffers, branch, training):
        mask = x > 0
        return x * mask, mask

    def backward(self, dout, mask, params):
        return dout * mask, {}


class GlobalAvgPool:
    kind = "pool"

    def __init__(self, name):
        self.name = name

    def forward(self, x, params, buffers, branch, training):
        return x.mean(axis=(2, 3)), x.shape

    def backward(self, dout, shape, params):
        n, c, h, w = shape
        return np.broadcast_to(dout[:, :, None, None] / (h * w), shape).copy(), {}


class Linear:
    kind = "linear"

    def __init__(self, name, in_features, out_features):
        self.name = name
        self.in_features, self.out_features = in_features, out_features
        self.weight, self.bias = f"{name}.weight", f"{name}.bias"

    def param_shapes(self):
        return {self.weight: (self.out_features, self.in_features), self.bias: (self.out_features,)}

    def forward(self, x, params, buffers, branch, training):
        return x @ params[self.weight].T + params[self.bias], x

    def backward(self, dout, x, params):
        grads = {self.weight: dout.T @ x, self.bias: dout.sum(axis=0)}
        return dout @ params[self.weight], grads
