"""Dual reconstruction: two parallel upsamplers fused into the SR image.

U1 is a learned transposed-convolution path plus a bicubic skip, so it
degenerates to plain bicubic upsampling when its weights are zero. U2 is a
conv + sub-pixel-shuffle path. Outputs are fused (concat+conv by default,
addition optionally) and projected to 3 channels. Training output is left
unclamped; clamp at inference / metric time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import Tensor, nn

from .exceptions import ShapeError
from .generator import LEAKY_SLOPE
from .imageops import bicubic_resize

FUSION_MODES = ("concat_conv", "add")


@dataclass(frozen=True)
class DRMConfig:
    fusion_mode: str = "concat_conv"
    scale: int = 4

    def validate(self) -> None:
        if self.fusion_mode not in FUSION_MODES:
            raise ValueError(f"fusion_mode must be one of {FUSION_MODES}")
        if self.scale not in (2, 4):
            raise ValueError(f"scale must be 2 or 4, got {self.scale}")


def pixel_shuffle(x: Tensor, r: int) -> Tensor:
    """Rearrange c*r^2 channels into an r-times larger spatial grid.

    Pure index permutation: out[c, r*i+di, r*j+dj] = x[c*r^2 + di*r + dj, i, j].
    """
    if r < 1:
        raise ShapeError(f"shuffle factor must be >= 1, got {r}")
    if x.shape[-3] % (r * r):
        raise ShapeError(
            f"channels {x.shape[-3]} not divisible by r^2 = {r * r}"
        )
    if r == 1:
        return x
    return F.pixel_shuffle(x, r)


def pixel_unshuffle(x: Tensor, r: int) -> Tensor:
    """Inverse of :func:`pixel_shuffle`."""
    if r < 1:
        raise ShapeError(f"shuffle factor must be >= 1, got {r}")
    if x.shape[-2] % r or x.shape[-1] % r:
        raise ShapeError(
            f"spatial dims {tuple(x.shape[-2:])} not divisible by r = {r}"
        )
    if r == 1:
        return x
    return F.pixel_unshuffle(x, r)


class UpsamplerU1(nn.Module):
    """Transposed-convolution path with a bicubic skip.

    Each stage is a stride-2 4x4 transposed conv with padding 1, the one
    geometry that doubles the spatial size exactly with no output-padding
    ambiguity. With all stage weights zero the output equals
    ``bicubic_resize(x, scale*h, scale*w, clamp=False)`` bit for bit.
    """

    def __init__(self, n_c: int, scale: int):
        super().__init__()
        self.scale = scale
        self.tconvs = nn.ModuleList(
            nn.ConvTranspose2d(n_c, n_c, 4, stride=2, padding=1)
            for _ in range(int(math.log2(scale)))
        )

    def forward(self, x: Tensor) -> Tensor:
        h, w = x.shape[-2], x.shape[-1]
        y = x
        for k, tconv in enumerate(self.tconvs):
            if k > 0:
                y = F.leaky_relu(y, LEAKY_SLOPE)
            y = tconv(y)
        if y.shape[-2] != self.scale * h or y.shape[-1] != self.scale * w:
            raise ShapeError(
                f"transposed-conv path produced {tuple(y.shape[-2:])}, "
                f"expected {(self.scale * h, self.scale * w)}"
            )
        skip = _bicubic_nd(x, self.scale * h, self.scale * w)
        return y + skip


def _bicubic_nd(x: Tensor, out_h: int, out_w: int) -> Tensor:
    """Unclamped bicubic resize accepting an optional batch dim."""
    if x.dim() == 3:
        return bicubic_resize(x, out_h, out_w, clamp=False)
    return torch.stack(
        [bicubic_resize(item, out_h, out_w, clamp=False) for item in x]
    )


class UpsamplerU2(nn.Module):
    """Conv + sub-pixel path: each stage expands n_c -> 4*n_c then shuffles
    back to n_c at twice the resolution; a final 3x3 conv closes the path."""

    def __init__(self, n_c: int, scale: int):
        super().__init__()
        self.stages = nn.ModuleList(
            nn.Conv2d(n_c, 4 * n_c, 3, padding=1)
            for _ in range(int(math.log2(scale)))
        )
        self.proj = nn.Conv2d(n_c, n_c, 3, padding=1)

    def forward(self, x: Tensor) -> Tensor:
        y = x
        for conv in self.stages:
            y = pixel_shuffle(F.leaky_relu(conv(y), LEAKY_SLOPE), 2)
        return self.proj(y)


class DualReconstruction(nn.Module):
    """Fuse U1 and U2 and project to a 3-channel SR image."""

    def __init__(self, n_c: int, cfg: DRMConfig):
        super().__init__()
        cfg.validate()
        self.cfg = cfg
        self.u1 = UpsamplerU1(n_c, cfg.scale)
        self.u2 = UpsamplerU2(n_c, cfg.scale)
        self.fuse_conv = nn.Conv2d(2 * n_c, n_c, 3, padding=1)
        self.out_conv = nn.Conv2d(n_c, 3, 3, padding=1)

    def forward(self, x: Tensor) -> Tensor:
        up1 = self.u1(x)
        up2 = self.u2(x)
        if up1.shape[-2:] != up2.shape[-2:]:
            raise ShapeError(
                f"upsampler outputs disagree: {tuple(up1.shape[-2:])} vs "
                f"{tuple(up2.shape[-2:])}"
            )
        if self.cfg.fusion_mode == "concat_conv":
            fused = F.leaky_relu(
                self.fuse_conv(torch.cat([up1, up2], dim=-3)), LEAKY_SLOPE
            )
        else:
            fused = up1 + up2
        return self.out_conv(fused)
