"""Full SR network assembly and deterministic weight initialization."""

from __future__ import annotations

import math

import torch
from torch import Tensor, nn

from .generator import LEAKY_SLOPE, DcrTrunk, GeneratorConfig
from .reconstruction import DRMConfig, DualReconstruction

RESIDUAL_INIT_SCALE = 0.1


class SuperResolutionNet(nn.Module):
    """DCR trunk followed by the dual reconstruction module.

    Maps (3, H, W) in [0, 1] to an unclamped (3, scale*H, scale*W) image;
    also accepts a leading batch dim.
    """

    def __init__(self, gen_cfg: GeneratorConfig, drm_cfg: DRMConfig):
        super().__init__()
        if gen_cfg.scale != drm_cfg.scale:
            raise ValueError("generator and reconstruction scale disagree")
        self.gen_cfg = gen_cfg
        self.drm_cfg = drm_cfg
        self.trunk = DcrTrunk(gen_cfg)
        self.drm = DualReconstruction(gen_cfg.n_c, drm_cfg)

    def forward(self, x_lr: Tensor) -> Tensor:
        return self.drm(self.trunk(x_lr))


def _fan_in(weight: Tensor, transposed: bool) -> int:
    # Conv2d weight is (out, in, kh, kw); ConvTranspose2d is (in, out, kh, kw).
    in_ch = weight.shape[0] if transposed else weight.shape[1]
    return in_ch * weight.shape[2] * weight.shape[3]


def _kaiming_normal(weight: Tensor, rng: torch.Generator, transposed: bool = False):
    gain = math.sqrt(2.0 / (1.0 + LEAKY_SLOPE**2))
    std = gain / math.sqrt(_fan_in(weight, transposed))
    with torch.no_grad():
        weight.normal_(0.0, std, generator=rng)


def _icnr(conv: nn.Conv2d, rng: torch.Generator, r: int = 2):
    """Init a conv feeding pixel_shuffle so the shuffle output has no
    checkerboard phase at step 0: draw an (out/r^2)-channel kernel and
    replicate each output channel r^2 times."""
    out_ch = conv.weight.shape[0] // (r * r)
    base = conv.weight.new_empty(out_ch, *conv.weight.shape[1:])
    _kaiming_normal(base, rng)
    with torch.no_grad():
        conv.weight.copy_(base.repeat_interleave(r * r, dim=0))


def init_params(model: SuperResolutionNet, rng: torch.Generator) -> None:
    """Deterministic init under an explicit generator.

    Kaiming fan-in normals everywhere, zero biases; the residual-branch convs
    (f_m2, f_c4, trunk) are scaled by 0.1 so the network starts close to its
    head convolution; the convs feeding pixel shuffles get ICNR replication.
    """
    residual_weights = set()
    for block in model.trunk.blocks:
        residual_weights.add(id(block.f_c4.weight))
        residual_weights.add(id(block.f_m2.weight))
    residual_weights.add(id(model.trunk.trunk.weight))
    icnr_weights = {id(c.weight) for c in model.drm.u2.stages}

    for module in model.modules():
        if isinstance(module, nn.ConvTranspose2d):
            _kaiming_normal(module.weight, rng, transposed=True)
        elif isinstance(module, nn.Conv2d):
            if id(module.weight) in icnr_weights:
                _icnr(module, rng)
            else:
                _kaiming_normal(module.weight, rng)
                if id(module.weight) in residual_weights:
                    with torch.no_grad():
                        module.weight.mul_(RESIDUAL_INIT_SCALE)
        else:
            continue
        if module.bias is not None:
            with torch.no_grad():
                module.bias.zero_()


def build_model(
    gen_cfg: GeneratorConfig, drm_cfg: DRMConfig, seed: int
) -> SuperResolutionNet:
    """Construct and initialize the SR network; bit-identical under a seed."""
    model = SuperResolutionNet(gen_cfg, drm_cfg)
    rng = torch.Generator().manual_seed(seed)
    init_params(model, rng)
    return model
