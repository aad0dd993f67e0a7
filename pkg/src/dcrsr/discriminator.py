"""Adversarial critic: VGG-16-style conv stack, H-Swish, GAP head.

Thirteen 3x3 convolutions in five groups; the last conv of each group has
stride 2 (five halvings total), so any input of at least 32x32 leaves at
least one spatial cell. Fully-connected layers are replaced by global average
pooling plus a 1x1 conv, making the single output logit size-agnostic.
No normalization layers.
"""

from __future__ import annotations

import torch
from torch import Tensor, nn

from .exceptions import ShapeError

# (width multiplier, convs in group); channels = base_width * multiplier.
_GROUPS = ((1, 2), (2, 2), (4, 3), (8, 3), (8, 3))

MIN_INPUT = 32

# Var(hswish(x)) ~ 0.27 Var(x) for small signals; this gain keeps activation
# variance roughly constant through the unnormalized 13-conv stack.
HSWISH_GAIN = 1.9


def hswish(x: Tensor) -> Tensor:
    """x * clamp(x + 3, 0, 6) / 6, elementwise."""
    return x * torch.clamp(x + 3.0, 0.0, 6.0) / 6.0


class VggStyleDiscriminator(nn.Module):
    """Realism critic emitting one logit per image.

    ``base_width=64`` gives the 64..512 channel plan; smaller widths keep the
    same topology for cheap desk-scale runs.
    """

    def __init__(self, base_width: int = 64):
        super().__init__()
        self.base_width = base_width
        convs = []
        in_ch = 3
        for mult, count in _GROUPS:
            out_ch = base_width * mult
            for k in range(count):
                stride = 2 if k == count - 1 else 1
                convs.append(nn.Conv2d(in_ch, out_ch, 3, stride=stride, padding=1))
                in_ch = out_ch
        self.convs = nn.ModuleList(convs)
        self.head = nn.Conv2d(in_ch, 1, 1)

    def forward(self, img: Tensor) -> Tensor:
        """Return a scalar logit for (3, H, W) input, or (B,) for a batch."""
        if img.shape[-3] != 3:
            raise ShapeError(f"expected 3-channel input, got {img.shape[-3]}")
        if img.shape[-2] < MIN_INPUT or img.shape[-1] < MIN_INPUT:
            raise ShapeError(
                f"input {tuple(img.shape[-2:])} below minimum "
                f"{MIN_INPUT}x{MIN_INPUT}"
            )
        x = img
        for conv in self.convs:
            x = hswish(conv(x))
        pooled = x.mean(dim=(-2, -1), keepdim=True)
        logit = self.head(pooled)
        return logit.squeeze(-1).squeeze(-1).squeeze(-1)


def build_discriminator(base_width: int = 64, seed: int = 0) -> VggStyleDiscriminator:
    """Construct and deterministically initialize the critic."""
    disc = VggStyleDiscriminator(base_width)
    rng = torch.Generator().manual_seed(seed)
    for module in disc.modules():
        if isinstance(module, nn.Conv2d):
            fan_in = module.weight.shape[1] * module.weight.shape[2] * module.weight.shape[3]
            with torch.no_grad():
                module.weight.normal_(0.0, HSWISH_GAIN / fan_in**0.5, generator=rng)
                module.bias.zero_()
    return disc
