"""Image tensor helpers: validation, bicubic resampling, luma, 8-bit I/O.

Images are plain ``torch.Tensor`` in channel-major ``(C, H, W)`` layout with
float values in [0, 1]; feature maps use the same layout but are unbounded.
"""

from __future__ import annotations

import functools
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from .exceptions import InvalidSize, ShapeError

# Catmull-Rom parameter of the cubic convolution kernel.
CUBIC_A = -0.5

# BT.601 luma coefficients.
_LUMA = (0.299, 0.587, 0.114)


def require_chw(t: torch.Tensor, name: str = "tensor") -> None:
    """Check for a 3-d channel-major tensor with positive dims."""
    if t.dim() != 3:
        raise ShapeError(f"{name}: expected (C, H, W), got shape {tuple(t.shape)}")
    if min(t.shape) < 1:
        raise ShapeError(f"{name}: all dims must be positive, got {tuple(t.shape)}")


def require_image(t: torch.Tensor, name: str = "image") -> None:
    """Check the image contract: (C, H, W), C in {1, 3}, values in [0, 1]."""
    require_chw(t, name)
    if t.shape[0] not in (1, 3):
        raise ShapeError(f"{name}: image must have 1 or 3 channels, got {t.shape[0]}")
    if not torch.isfinite(t).all():
        raise ShapeError(f"{name}: non-finite values")
    if t.min() < 0.0 or t.max() > 1.0:
        raise ShapeError(f"{name}: values outside [0, 1]")


def cubic_weight(t: np.ndarray, a: float = CUBIC_A) -> np.ndarray:
    """Two-lobe cubic convolution kernel, evaluated elementwise."""
    t = np.abs(t)
    w = np.zeros_like(t)
    near = t <= 1.0
    far = (t > 1.0) & (t < 2.0)
    w[near] = (a + 2.0) * t[near] ** 3 - (a + 3.0) * t[near] ** 2 + 1.0
    w[far] = a * t[far] ** 3 - 5.0 * a * t[far] ** 2 + 8.0 * a * t[far] - 4.0 * a
    return w


@functools.lru_cache(maxsize=256)
def _resize_matrix(in_size: int, out_size: int) -> torch.Tensor:
    """Dense (out_size, in_size) float64 resampling matrix for one axis.

    Sample positions follow the half-pixel convention
    ``src = (dst + 0.5) * in/out - 0.5``; out-of-range taps are clamped to the
    edge (their weight folds onto the border sample).
    """
    m = np.zeros((out_size, in_size), dtype=np.float64)
    scale = in_size / out_size
    for dst in range(out_size):
        src = (dst + 0.5) * scale - 0.5
        base = int(np.floor(src))
        taps = np.arange(base - 1, base + 3)
        weights = cubic_weight(src - taps.astype(np.float64))
        np.add.at(m[dst], np.clip(taps, 0, in_size - 1), weights)
    return torch.from_numpy(m)


def bicubic_resize(
    img: torch.Tensor, out_h: int, out_w: int, clamp: bool = True
) -> torch.Tensor:
    """Separable bicubic resample of a (C, H, W) tensor to (C, out_h, out_w).

    ``clamp=True`` (the image default) clips the result to [0, 1]; pass
    ``clamp=False`` for unbounded feature maps. Differentiable w.r.t. ``img``.
    """
    if out_h < 1 or out_w < 1:
        raise InvalidSize(f"target size must be >= 1, got ({out_h}, {out_w})")
    require_chw(img, "bicubic_resize input")
    in_h, in_w = img.shape[-2], img.shape[-1]
    mh = _resize_matrix(in_h, out_h).to(img.dtype)
    mw = _resize_matrix(in_w, out_w).to(img.dtype)
    out = torch.matmul(torch.matmul(mh, img), mw.T)
    if clamp:
        out = out.clamp(0.0, 1.0)
    return out


def to_luma(img: torch.Tensor) -> torch.Tensor:
    """BT.601 luma of an RGB (3, H, W) tensor, returned as (1, H, W)."""
    require_chw(img, "to_luma input")
    if img.shape[0] != 3:
        raise ShapeError(f"to_luma expects 3 channels, got {img.shape[0]}")
    r, g, b = img[0], img[1], img[2]
    y = _LUMA[0] * r + _LUMA[1] * g + _LUMA[2] * b
    return y.unsqueeze(0)


def quantize8(img: torch.Tensor) -> torch.Tensor:
    """Round to the 8-bit grid and back to float (idempotent)."""
    return torch.round(img * 255.0) / 255.0


def load_image(path: str | Path) -> torch.Tensor:
    """Decode an image file to a float32 (3, H, W) tensor in [0, 1]."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float32) / 255.0
    return torch.from_numpy(arr).permute(2, 0, 1).contiguous()


def save_image(img: torch.Tensor, path: str | Path) -> None:
    """Write a (C, H, W) float tensor in [0, 1] as an 8-bit PNG."""
    require_chw(img, "save_image input")
    arr = (img.detach().clamp(0.0, 1.0) * 255.0).round().to(torch.uint8)
    arr = arr.permute(1, 2, 0).numpy()
    if arr.shape[2] == 1:
        arr = arr[:, :, 0]
    Image.fromarray(arr).save(path, format="PNG")
