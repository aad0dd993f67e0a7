"""Procedural texture corpus for desk-scale training and smoke tests.

Every image is drawn from one family: a smooth low-frequency base plus a few
oriented sinusoidal gratings whose frequencies straddle the LR Nyquist limit,
so plain bicubic upscaling aliases them while a trained model can learn the
family and do better.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch

from .imageops import save_image


def synth_texture(size: int, rng: np.random.Generator, scale: int = 4) -> torch.Tensor:
    """One (3, size, size) float32 texture in [0, 1].

    High-frequency content is kept between 0.70 and 0.96 of the LR Nyquist
    frequency (size / (2*scale) cycles per image): coarse enough to survive
    the downscale, fine enough that interpolation attenuates it badly.
    """
    yy, xx = np.meshgrid(
        np.arange(size, dtype=np.float64) / size,
        np.arange(size, dtype=np.float64) / size,
        indexing="ij",
    )

    def grating(freq_lo: float, freq_hi: float, amp: float) -> np.ndarray:
        freq = rng.uniform(freq_lo, freq_hi)
        theta = rng.uniform(0.0, np.pi)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        u = np.cos(theta) * xx + np.sin(theta) * yy
        return amp * np.sin(2.0 * np.pi * freq * u + phase)

    nyquist = size / (2.0 * scale)
    field = (
        grating(0.5, 2.0, 0.4)
        + grating(0.70 * nyquist, 0.96 * nyquist, 1.0)
        + grating(0.70 * nyquist, 0.96 * nyquist, 0.8)
    )

    channels = []
    for _ in range(3):
        channels.append(rng.uniform(0.7, 1.0) * field + rng.uniform(-0.15, 0.15))
    img = np.stack(channels)

    lo, hi = img.min(), img.max()
    img = 0.05 + 0.9 * (img - lo) / max(hi - lo, 1e-9)
    return torch.from_numpy(img.astype(np.float32))


def make_corpus(
    out_dir: str | Path, count: int = 64, size: int = 96, seed: int = 0
) -> Path:
    """Write ``count`` HR textures as PNGs under ``out_dir/HR``."""
    hr_dir = Path(out_dir) / "HR"
    hr_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    for idx in range(count):
        save_image(synth_texture(size, rng), hr_dir / f"tex_{idx:04d}.png")
    return Path(out_dir)
