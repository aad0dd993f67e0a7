"""Bit-exact checkpoint serialization.

Binary layout (all integers little-endian)::

    8s    magic  "DCRSRCKP"
    u32   format version (currently 1)
    u64   config hash
    u32   number of tensors
    per tensor: u16 name length, utf-8 name, u8 dtype code (0 = f32),
                u8 ndim, ndim x u32 dims
    raw float32 payloads, in manifest order

Every tensor is float32; non-tensor state (iteration counter, RNG state
bytes) is encoded into f32 tensors by the helpers below, which is lossless
for integers below 2**24 and for byte values. A human-readable sidecar text
file ``<path>.meta`` carries iteration/seed/metrics plus the flattened
config as ``key = value`` lines; float values use ``repr`` so they reload
bit-exactly.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .exceptions import CheckpointError

MAGIC = b"DCRSRCKP"
VERSION = 1
_DTYPE_F32 = 0


@dataclass
class Checkpoint:
    config_hash: int
    tensors: dict[str, torch.Tensor]
    meta: dict[str, str] = field(default_factory=dict)
    version: int = VERSION


def sidecar_path(path: str | Path) -> Path:
    return Path(str(path) + ".meta")


def encode_scalar(value: float | int) -> torch.Tensor:
    return torch.tensor([float(value)], dtype=torch.float32)


def decode_scalar(t: torch.Tensor) -> float:
    return float(t.reshape(-1)[0].item())


def encode_bytes(state: torch.Tensor) -> torch.Tensor:
    """uint8 tensor -> f32 tensor (values 0..255 are exact in f32)."""
    if state.dtype != torch.uint8:
        raise CheckpointError(f"expected uint8 state, got {state.dtype}")
    return state.to(torch.float32)


def decode_bytes(t: torch.Tensor) -> torch.Tensor:
    return t.to(torch.uint8)


def save_checkpoint(
    path: str | Path,
    tensors: dict[str, torch.Tensor],
    config_hash: int,
    meta: dict[str, str] | None = None,
) -> Path:
    """Write the binary tensor table plus the sidecar; returns the path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = [MAGIC, struct.pack("<I", VERSION), struct.pack("<Q", config_hash)]
    header.append(struct.pack("<I", len(tensors)))
    payloads = []
    for name, tensor in tensors.items():
        if tensor.dtype != torch.float32:
            raise CheckpointError(f"tensor {name!r} is {tensor.dtype}, need float32")
        raw = name.encode("utf-8")
        shape = tuple(tensor.shape)
        header.append(struct.pack("<H", len(raw)))
        header.append(raw)
        header.append(struct.pack("<BB", _DTYPE_F32, len(shape)))
        header.append(struct.pack(f"<{len(shape)}I", *shape))
        payloads.append(
            tensor.detach().contiguous().cpu().numpy().astype("<f4", copy=False).tobytes()
        )
    with open(path, "wb") as fh:
        for chunk in header:
            fh.write(chunk)
        for chunk in payloads:
            fh.write(chunk)
    if meta is not None:
        lines = [f"{k} = {v}" for k, v in meta.items()]
        sidecar_path(path).write_text("\n".join(lines) + "\n")
    return path


def load_checkpoint(path: str | Path) -> Checkpoint:
    path = Path(path)
    blob = path.read_bytes()
    if blob[:8] != MAGIC:
        raise CheckpointError(f"{path}: bad magic {blob[:8]!r}")
    (version,) = struct.unpack_from("<I", blob, 8)
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported version {version}")
    (config_hash,) = struct.unpack_from("<Q", blob, 12)
    (count,) = struct.unpack_from("<I", blob, 20)
    offset = 24

    manifest: list[tuple[str, tuple[int, ...]]] = []
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", blob, offset)
        offset += 2
        name = blob[offset : offset + name_len].decode("utf-8")
        offset += name_len
        dtype_code, ndim = struct.unpack_from("<BB", blob, offset)
        offset += 2
        if dtype_code != _DTYPE_F32:
            raise CheckpointError(f"{path}: unknown dtype code {dtype_code}")
        shape = struct.unpack_from(f"<{ndim}I", blob, offset)
        offset += 4 * ndim
        manifest.append((name, shape))

    tensors: dict[str, torch.Tensor] = {}
    for name, shape in manifest:
        numel = int(np.prod(shape, dtype=np.int64)) if shape else 1
        nbytes = 4 * numel
        arr = np.frombuffer(blob, dtype="<f4", count=numel, offset=offset).copy()
        offset += nbytes
        tensors[name] = torch.from_numpy(arr).reshape(shape)
    if offset != len(blob):
        raise CheckpointError(f"{path}: {len(blob) - offset} trailing bytes")

    meta: dict[str, str] = {}
    side = sidecar_path(path)
    if side.is_file():
        for line in side.read_text().splitlines():
            if not line.strip():
                continue
            key, _, value = line.partition(" = ")
            meta[key.strip()] = value
    return Checkpoint(config_hash=config_hash, tensors=tensors, meta=meta)
