"""Base feature network: densely connected residual blocks with extra shortcuts."""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import Tensor, nn

from .exceptions import ShapeError

LEAKY_SLOPE = 0.2


@dataclass(frozen=True)
class GeneratorConfig:
    n_c: int = 64
    n_g: int = 32
    num_blocks: int = 3
    scale: int = 4
    # (src, dst): input of block src is added to the output of block dst.
    # None disables the extra bypass.
    inter_block_shortcut: tuple[int, int] | None = (0, 1)

    def validate(self) -> None:
        if min(self.n_c, self.n_g, self.num_blocks) < 1:
            raise ValueError("n_c, n_g and num_blocks must be >= 1")
        if self.scale not in (2, 4):
            raise ValueError(f"scale must be 2 or 4, got {self.scale}")
        if self.inter_block_shortcut is not None:
            src, dst = self.inter_block_shortcut
            if not (0 <= src < dst < self.num_blocks):
                raise ValueError(
                    f"inter_block_shortcut {self.inter_block_shortcut} must be "
                    f"ordered distinct indices below num_blocks={self.num_blocks}"
                )


class DcrBlock(nn.Module):
    """Dense four-conv block with a squeezed mid shortcut and an end shortcut.

    The first three 3x3 convs grow by n_g channels each on the running
    concatenation; f_m2 (1x1) squeezes the second feature back to n_c for the
    mid shortcut, and f_c4 closes the block back to n_c for the end shortcut.
    Zeroing f_m2 and f_c4 makes the block an exact identity.
    """

    def __init__(self, n_c: int, n_g: int):
        super().__init__()
        self.n_c = n_c
        self.f_c1 = nn.Conv2d(n_c, n_g, 3, padding=1)
        self.f_c2 = nn.Conv2d(n_c + n_g, n_g, 3, padding=1)
        self.f_c3 = nn.Conv2d(n_c + 2 * n_g, n_g, 3, padding=1)
        self.f_c4 = nn.Conv2d(n_c + 3 * n_g, n_c, 3, padding=1)
        self.f_m2 = nn.Conv2d(n_g, n_c, 1)

    def forward(self, x: Tensor) -> Tensor:
        if x.shape[-3] != self.n_c:
            raise ShapeError(f"expected {self.n_c} channels, got {x.shape[-3]}")
        h1 = F.leaky_relu(self.f_c1(x), LEAKY_SLOPE)
        h2 = F.leaky_relu(self.f_c2(torch.cat([x, h1], dim=-3)), LEAKY_SLOPE)
        mid = x + self.f_m2(h2)
        h3 = F.leaky_relu(self.f_c3(torch.cat([x, h1, h2], dim=-3)), LEAKY_SLOPE)
        return mid + self.f_c4(torch.cat([x, h1, h2, h3], dim=-3))


class DcrTrunk(nn.Module):
    """Shallow head conv, a chain of DCR blocks, and a global residual.

    Accepts (3, H, W) or (B, 3, H, W); spatial size is preserved throughout.
    """

    def __init__(self, cfg: GeneratorConfig):
        super().__init__()
        cfg.validate()
        self.cfg = cfg
        self.head = nn.Conv2d(3, cfg.n_c, 3, padding=1)
        self.blocks = nn.ModuleList(
            DcrBlock(cfg.n_c, cfg.n_g) for _ in range(cfg.num_blocks)
        )
        self.trunk = nn.Conv2d(cfg.n_c, cfg.n_c, 3, padding=1)

    def forward(self, x_lr: Tensor) -> Tensor:
        if x_lr.shape[-3] != 3:
            raise ShapeError(f"expected 3-channel input, got {x_lr.shape[-3]}")
        f0 = self.head(x_lr)
        shortcut = self.cfg.inter_block_shortcut
        feats = f0
        saved = None
        for k, block in enumerate(self.blocks):
            if shortcut is not None and k == shortcut[0]:
                saved = feats
            feats = block(feats)
            if shortcut is not None and k == shortcut[1]:
                feats = feats + saved
        return f0 + self.trunk(feats)
