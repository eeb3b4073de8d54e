"""A small CNN classifier with dual (main/auxiliary) batch normalization."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from afa.errors import InsufficientBatch, InvalidParam, NoTape, ShapeMismatch
from afa.nn.layers import Branch, Conv2d, DualNorm, GlobalAvgPool, Linear, ReLU
from afa.tensor_core import Rng


@dataclass(frozen=True)
class ModelSpec:
    """Conv -> DualNorm -> ReLU blocks, global average pooling, linear head.

    ``blocks`` holds ``(out_channels, kernel, stride)`` per block.
    """

    input_shape: tuple[int, int, int] = (3, 16, 16)
    blocks: tuple[tuple[int, int, int], ...] = ((16, 3, 1), (32, 3, 2), (64, 3, 2))
    num_classes: int = 10
    init: str = "he-normal"

    def __post_init__(self):
        object.__setattr__(self, "input_shape", tuple(int(d) for d in self.input_shape))
        object.__setattr__(self, "blocks", tuple(tuple(int(v) for v in b) for b in self.blocks))
        if self.num_classes < 2:
            raise InvalidParam("num_classes must be >= 2")
        if not self.blocks:
            raise InvalidParam("need at least one conv block")
        if self.init not in ("he-normal", "zeros"):
            raise InvalidParam(f"unknown init scheme {self.init!r}")
        size = self.input_shape[1]
        for out_ch, k, s in self.blocks:
            size = (size + 2 * (k // 2) - k) // s + 1
            if out_ch < 1 or size < 1:
                raise InvalidParam(f"block ({out_ch}, {k}, {s}) does not fit the input")


@dataclass
class Tape:
    records: list = field(default_factory=list)
    branch: Branch = Branch.MAIN
    training: bool = False


class Model:
    def __init__(self, spec: ModelSpec, seed: int = 0, dtype=np.float32):
        self.spec = spec
        self.dtype = np.dtype(dtype)
        self.layers = []
        in_ch = spec.input_shape[0]
        for i, (out_ch, k, s) in enumerate(spec.blocks):
            self.layers += [
                Conv2d(f"conv{i}", in_ch, out_ch, k, s),
                DualNorm(f"norm{i}", out_ch),
                ReLU(f"relu{i}"),
            ]
            in_ch = out_ch
        self.layers += [GlobalAvgPool("pool"), Linear("fc", in_ch, spec.num_classes)]
        self.params = {}
        self.buffers = {}
        self.tape = None
        self._init_state(Rng(seed).child("init"))

    def _init_state(self, rng):
        for layer in self.layers:
            for name, shape in getattr(layer, "param_shapes", dict)().items():
                if name.endswith(".gamma"):
                    arr = np.ones(shape)
                elif name.endswith(".beta") or name.endswith(".bias") or self.spec.init == "zeros":
                    arr = np.zeros(shape)
                else:
                    fan_in = int(np.prod(shape[1:]))
                    arr = rng.child(name).normal(shape) * np.sqrt(2.0 / fan_in)
                self.params[name] = arr.astype(self.dtype)
            for name, shape in getattr(layer, "buffer_shapes", dict)().items():
                fill = 1.0 if name.endswith(".var") else 0.0
                self.buffers[name] = np.full(shape, fill, dtype=self.dtype)

    # -- introspection -----------------------------------------------------

    @property
    def norm_layers(self) -> list[DualNorm]:
        return [layer for layer in self.layers if isinstance(layer, DualNorm)]

    @property
    def conv_layers(self) -> list[Conv2d]:
        return [layer for layer in self.layers if isinstance(layer, Conv2d)]

    def norm_affine_names(self) -> set[str]:
        return {n for layer in self.norm_layers for n in layer.affine_names()}

    def branch_state(self, branch) -> dict[str, np.ndarray]:
        """Running statistics and affine parameters owned by one branch."""
        tag = f".{Branch(branch).value}."
        state = {k: v for k, v in self.params.items() if tag in k}
        state.update({k: v for k, v in self.buffers.items() if tag in k})
        return state

    def branch_state_hash(self, branch) -> str:
        h = hashlib.sha256()
        for name, arr in sorted(self.branch_state(branch).items()):
            h.update(name.encode())
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()

    def copy(self) -> "Model":
        other = Model.__new__(Model)
        other.spec, other.dtype, other.layers, other.tape = self.spec, self.dtype, self.layers, None
        other.params = {k: v.copy() for k, v in self.params.items()}
        other.buffers = {k: v.copy() for k, v in self.buffers.items()}
        return other

    # -- passes ------------------------------------------------------------

    def forward(self, x, branch=Branch.MAIN, training=False) -> np.ndarray:
        """Logits for a batch ``x`` of shape N x C x H x W.

        Records a tape for :meth:`backward`.  Training passes need N >= 2 and
        update the running statistics of ``branch`` only; evaluation uses the
        MAIN statistics regardless of ``branch``.
        """
        x = np.asarray(x, dtype=self.dtype)
        if x.ndim == 3:
            x = x[None]
        if x.shape[1:] != self.spec.input_shape:
            raise ShapeMismatch(f"model expects inputs {self.spec.input_shape}, got {x.shape[1:]}")
        if x.shape[0] == 0:
            raise ShapeMismatch("empty batch")
        if training and x.shape[0] < 2:
            raise InsufficientBatch("training needs at least 2 images for batch statistics")
        branch = Branch(branch) if training else Branch.MAIN
        tape = Tape(branch=branch, training=training)
        for layer in self.layers:
            x, cache = layer.forward(x, self.params, self.buffers, branch, training)
            tape.records.append((layer, cache))
        self.tape = tape
        return x

    def backward(self, dlogits, tape: Tape | None = None) -> dict[str, np.ndarray]:
        """Gradients of every parameter given dLoss/dlogits.

        Parameters the recorded pass did not touch (the other branch's affine
        set) get zero gradients.
        """
        if tape is None:
            tape, self.tape = self.tape, None
        if tape is None:
            raise NoTape("backward() needs a recorded forward pass")
        grads = {name: np.zeros_like(p) for name, p in self.params.items()}
        d = np.asarray(dlogits, dtype=self.dtype)
        for layer, cache in reversed(tape.records):
            d, g = layer.backward(d, cache, self.params)
            for name, val in g.items():
                grads[name] += val.astype(self.dtype)
        return grads

    def logits(self, x, batch_size: int = 512) -> np.ndarray:
        """Evaluation-mode logits (MAIN statistics), batched; leaves no tape."""
        x = np.asarray(x)
        if x.ndim == 3:
            x = x[None]
        outs = [self.forward(x[i:i + batch_size], training=False) for i in range(0, len(x), batch_size)]
        self.tape = None
        return np.concatenate(outs)

    def predict(self, x, batch_size: int = 512) -> np.ndarray:
        return np.argmax(self.logits(x, batch_size), axis=1)
