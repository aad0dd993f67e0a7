"""Training objectives: pixel L1, adversarial, and perceptual feature loss.

The adversarial pair is computed from raw logits with softplus so no log(0)
can occur; the generator side uses the non-saturating -log D(fake) form,
whose minimizer coincides with the saturating one.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import torch
import torch.nn.functional as F
from torch import Tensor, nn

from .checkpoint import load_checkpoint
from .exceptions import ShapeError

log = logging.getLogger(__name__)

# VGG-16 feature topology up to (and including) the 10th conv, cut before its
# activation and before the 4th pooling stage. 'M' is a 2x2 max pool.
_EXTRACTOR_PLAN = (64, 64, "M", 128, 128, "M", 256, 256, 256, "M", 512, 512, 512)


@dataclass(frozen=True)
class LossWeights:
    w_pixel: float = 0.01
    w_gan: float = 0.005
    w_feat: float = 1.0

    def validate(self) -> None:
        if min(self.w_pixel, self.w_gan, self.w_feat) < 0:
            raise ValueError("loss weights must be non-negative")


SAM_WEIGHTS = LossWeights(w_pixel=1.0, w_gan=0.0, w_feat=0.0)


@dataclass
class LossBundle:
    total: Tensor
    pixel: float
    adversarial: float
    perceptual: float


def pixel_loss(sr: Tensor, hr: Tensor) -> Tensor:
    """Mean absolute difference over every element."""
    if sr.shape != hr.shape:
        raise ShapeError(f"shape mismatch {tuple(sr.shape)} vs {tuple(hr.shape)}")
    return (sr - hr).abs().mean()


def _as_tensor(logit: Tensor | float) -> Tensor:
    if isinstance(logit, Tensor):
        return logit
    return torch.tensor(float(logit), dtype=torch.float64)


def gan_losses(
    d_real_logit: Tensor | float, d_fake_logit: Tensor | float
) -> tuple[Tensor, Tensor]:
    """(critic loss, generator loss) from raw logits, batch-averaged.

    loss_D = -log D(real) - log(1 - D(fake)); loss_G = -log D(fake), with
    D = sigmoid(logit), expressed via softplus for stability.
    """
    real = _as_tensor(d_real_logit)
    fake = _as_tensor(d_fake_logit)
    loss_d = F.softplus(-real).mean() + F.softplus(fake).mean()
    loss_g = F.softplus(-fake).mean()
    return loss_d, loss_g


class FeatureExtractor(nn.Module):
    """Frozen conv feature map, flattened to one vector per spatial site.

    ``provenance`` records whether the weights came from a pretrained file or
    from a seeded random draw; both are deterministic and never trained.
    """

    def __init__(self, provenance: str):
        super().__init__()
        self.provenance = provenance
        layers: list[nn.Module] = []
        in_ch = 3
        for item in _EXTRACTOR_PLAN:
            if item == "M":
                layers.append(nn.MaxPool2d(2))
            else:
                layers.append(nn.Conv2d(in_ch, item, 3, padding=1))
                in_ch = item
        self.layers = nn.ModuleList(layers)
        # the final conv stays pre-activation; every earlier conv gets a relu
        self._last_conv = max(
            i for i, m in enumerate(self.layers) if isinstance(m, nn.Conv2d)
        )
        for p in self.parameters():
            p.requires_grad_(False)

    def forward(self, img: Tensor) -> Tensor:
        """(3, H, W) -> (M, C) feature vectors; batches map to (B, M, C)."""
        if img.shape[-3] != 3:
            raise ShapeError(f"expected 3-channel input, got {img.shape[-3]}")
        x = img
        for i, layer in enumerate(self.layers):
            x = layer(x)
            if isinstance(layer, nn.Conv2d) and i != self._last_conv:
                x = F.relu(x)
        # (..., C, H', W') -> (..., M, C) with M = H'*W'
        return x.flatten(start_dim=-2).transpose(-1, -2)


def fixed_random_extractor(seed: int = 0) -> FeatureExtractor:
    fe = FeatureExtractor(provenance="fixed_random")
    rng = torch.Generator().manual_seed(seed)
    for module in fe.layers:
        if isinstance(module, nn.Conv2d):
            fan_in = module.weight.shape[1] * 9
            with torch.no_grad():
                module.weight.normal_(0.0, (2.0 / fan_in) ** 0.5, generator=rng)
                module.bias.zero_()
    return fe


def load_feature_extractor(
    weights_path: str | Path | None = None, seed: int = 0
) -> FeatureExtractor:
    """Load pretrained extractor weights, or fall back to the seeded random
    extractor (with a logged notice) when no file is given or present."""
    if weights_path:
        path = Path(weights_path)
        if path.is_file():
            fe = FeatureExtractor(provenance="pretrained_vgg16")
            ckpt = load_checkpoint(path)
            fe.load_state_dict(ckpt.tensors)
            for p in fe.parameters():
                p.requires_grad_(False)
            return fe
        log.warning("extractor weights %s not found; using fixed_random", path)
    else:
        log.info("no extractor weights configured; using fixed_random")
    return fixed_random_extractor(seed)


def perceptual_loss(sr: Tensor, hr: Tensor, fe: FeatureExtractor) -> Tensor:
    """Mean, over the M feature vectors, of the L1 distance per vector."""
    if sr.shape != hr.shape:
        raise ShapeError(f"shape mismatch {tuple(sr.shape)} vs {tuple(hr.shape)}")
    f_sr = fe(sr)
    f_hr = fe(hr)
    return (f_sr - f_hr).abs().sum(dim=-1).mean()


def combined_vam_loss(
    sr: Tensor,
    hr: Tensor,
    d_fake_logit: Tensor,
    fe: FeatureExtractor | None,
    w: LossWeights,
) -> LossBundle:
    """Weighted sum of the three objectives for one generator step.

    The perceptual term is skipped (and reported as 0.0) when its weight is
    zero, so cheap runs never touch the extractor.
    """
    w.validate()
    l_pixel = pixel_loss(sr, hr)
    l_adv = F.softplus(-d_fake_logit).mean()
    total = w.w_pixel * l_pixel + w.w_gan * l_adv
    l_feat_val = 0.0
    if w.w_feat != 0.0:
        if fe is None:
            raise ValueError("w_feat != 0 requires a feature extractor")
        l_feat = perceptual_loss(sr, hr, fe)
        total = total + w.w_feat * l_feat
        l_feat_val = float(l_feat.detach())
    return LossBundle(
        total=total,
        pixel=float(l_pixel.detach()),
        adversarial=float(l_adv.detach()),
        perceptual=l_feat_val,
    )
