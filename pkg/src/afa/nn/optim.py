from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class SGD:
    """SGD with (Nesterov) momentum and decoupled-from-norm weight decay.

    Per step, for every parameter ``p`` with gradient ``g``::

        g   <- g + weight_decay * p        (skipped for names in ``no_decay``)
        buf <- momentum * buf + g          (buf starts at zero)
        d   <- g + momentum * buf  if nesterov else buf
        p   <- p - lr * d
    """

    lr: float = 0.1
    momentum: float = 0.9
    nesterov: bool = True
    weight_decay: float = 5e-4
    no_decay: frozenset = frozenset()
    buffers: dict = field(default_factory=dict)

    @classmethod
    def for_model(cls, model, **kwargs) -> "SGD":
        """Optimizer whose decay-exempt set is exactly the model's norm affine parameters."""
        return cls(no_decay=frozenset(model.norm_affine_names()), **kwargs)

    def step(self, params: dict, grads: dict) -> None:
        for name in sorted(params):
            p = params[name]
            g = np.asarray(grads[name], dtype=np.float64)
            if g.shape != p.shape:
                raise ValueError(f"gradient for {name} has shape {g.shape}, parameter {p.shape}")
            if self.weight_decay and name not in self.no_decay:
                g = g + self.weight_decay * p
            if self.momentum:
                buf = self.buffers.get(name)
                buf = g.copy() if buf is None else self.momentum * buf + g
                self.buffers[name] = buf
                d = g + self.momentum * buf if self.nesterov else buf
            else:
                d = g
            params[name] = (p - self.lr * d).astype(p.dtype)
