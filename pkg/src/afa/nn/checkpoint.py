"""Model checkpoints: a directory of AFAT tensors plus a plain-text manifest.

``model.manifest`` holds ``key=value`` lines describing the architecture,
followed by one line per stored array::

    <name> -> <file> <dims, x-separated> <role>

with role one of ``weight``, ``main-affine``, ``aux-affine`` or ``stat``.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from afa.errors import CorruptFile
from afa.nn.model import Model, ModelSpec
from afa.tensor_core import read_tensor, write_tensor

MANIFEST = "model.manifest"


def _role(name: str, is_buffer: bool) -> str:
    if is_buffer:
        return "stat"
    if ".main." in name:
        return "main-affine"
    if ".aux." in name:
        return "aux-affine"
    return "weight"


def save_checkpoint(model: Model, directory) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    spec = model.spec
    lines = [
        "format=afa-checkpoint-1",
        "input_shape=" + "x".join(map(str, spec.input_shape)),
        "blocks=" + ";".join(",".join(map(str, b)) for b in spec.blocks),
        f"num_classes={spec.num_classes}",
        f"init={spec.init}",
    ]
    entries = [(n, a, False) for n, a in sorted(model.params.items())]
    entries += [(n, a, True) for n, a in sorted(model.buffers.items())]
    for name, arr, is_buffer in entries:
        fname = f"{name}.afat"
        write_tensor(directory / fname, arr)
        dims = "x".join(map(str, arr.shape))
        lines.append(f"{name} -> {fname} {dims} {_role(name, is_buffer)}")
    (directory / MANIFEST).write_text("\n".join(lines) + "\n")
    return directory


def load_checkpoint(directory) -> Model:
    directory = Path(directory)
    path = directory / MANIFEST
    if not path.is_file():
        raise FileNotFoundError(f"no checkpoint manifest at {path}")
    header, entries = {}, []
    for line in path.read_text().splitlines():
        if not line.strip():
            continue
        if " -> " in line:
            name, rest = line.split(" -> ", 1)
            fname, dims, role = rest.split()
            entries.append((name, fname, tuple(int(d) for d in dims.split("x")), role))
        else:
            key, _, value = line.partition("=")
            header[key] = value
    if header.get("format") != "afa-checkpoint-1":
        raise CorruptFile(f"{path}: unknown checkpoint format {header.get('format')!r}")
    spec = ModelSpec(
        input_shape=tuple(int(d) for d in header["input_shape"].split("x")),
        blocks=tuple(tuple(int(v) for v in b.split(",")) for b in header["blocks"].split(";")),
        num_classes=int(header["num_classes"]),
        init=header["init"],
    )
    model = Model(spec)
    expected = set(model.params) | set(model.buffers)
    if {e[0] for e in entries} != expected:
        raise CorruptFile(f"{path}: stored arrays do not match the architecture")
    for name, fname, dims, role in entries:
        arr = read_tensor(directory / fname)
        if arr.shape != dims:
            raise CorruptFile(f"{fname}: dims {arr.shape} disagree with manifest {dims}")
        target = model.buffers if role == "stat" else model.params
        if target[name].shape != dims:
            raise CorruptFile(f"{fname}: dims {dims} do not fit parameter {name}")
        target[name] = arr.astype(np.float32)
    return model
