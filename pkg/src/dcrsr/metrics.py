"""Quantitative evaluation: PSNR and SSIM with SR-community conventions.

The corpus evaluator converts to BT.601 luma (optional), shaves a border,
clamps, and quantizes to the 8-bit grid before measuring, so the numbers a
directory of PNG files produces are reproducible regardless of how the
tensors were obtained.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from pathlib import Path

import torch
import torch.nn.functional as F

from .exceptions import ShapeError, TooSmall
from .imageops import load_image, quantize8, to_luma

# Reported for bit-identical images instead of an infinite ratio.
INF_PSNR_DB = 100.0

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def psnr(a: torch.Tensor, b: torch.Tensor, peak: float = 1.0) -> float:
    """10*log10(peak^2 / MSE); identical inputs return the 100 dB sentinel."""
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {tuple(a.shape)} vs {tuple(b.shape)}")
    mse = float(((a.to(torch.float64) - b.to(torch.float64)) ** 2).mean())
    if mse == 0.0:
        return INF_PSNR_DB
    return 10.0 * math.log10(peak * peak / mse)


@functools.lru_cache(maxsize=8)
def _gaussian_window(size: int, sigma: float) -> torch.Tensor:
    coords = torch.arange(size, dtype=torch.float64) - (size - 1) / 2.0
    g = torch.exp(-(coords**2) / (2.0 * sigma * sigma))
    g = g / g.sum()
    return torch.outer(g, g)


def ssim(a: torch.Tensor, b: torch.Tensor) -> float:
    """Mean local SSIM over valid 11x11 Gaussian windows, peak 1.0.

    Inputs are single-channel: (H, W) or (1, H, W).
    """
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {tuple(a.shape)} vs {tuple(b.shape)}")
    if a.dim() == 3:
        if a.shape[0] != 1:
            raise ShapeError(f"ssim expects one channel, got {a.shape[0]}")
        a, b = a[0], b[0]
    if a.dim() != 2:
        raise ShapeError(f"ssim expects (H, W) or (1, H, W), got {tuple(a.shape)}")
    if min(a.shape) < SSIM_WINDOW:
        raise TooSmall(
            f"image {tuple(a.shape)} smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window"
        )
    # accumulate in float64: E[x^2] - mu^2 cancels catastrophically in f32
    a = a.to(torch.float64)
    b = b.to(torch.float64)

    window = _gaussian_window(SSIM_WINDOW, SSIM_SIGMA).to(a.dtype)
    kernel = window.reshape(1, 1, SSIM_WINDOW, SSIM_WINDOW)

    def local_mean(img: torch.Tensor) -> torch.Tensor:
        return F.conv2d(img.reshape(1, 1, *img.shape), kernel)[0, 0]

    mu_a = local_mean(a)
    mu_b = local_mean(b)
    var_a = local_mean(a * a) - mu_a * mu_a
    var_b = local_mean(b * b) - mu_b * mu_b
    cov = local_mean(a * b) - mu_a * mu_b

    c1 = SSIM_K1 * SSIM_K1
    c2 = SSIM_K2 * SSIM_K2
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return float((num / den).mean())


@dataclass
class ImageScore:
    name: str
    psnr_db: float
    ssim: float


@dataclass
class MetricReport:
    scores: list[ImageScore]
    mean_psnr: float
    mean_ssim: float
    shave: int
    on_luma: bool
    missing: list[str] = field(default_factory=list)
    errors: list[tuple[str, str]] = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return not self.missing and not self.errors


def _prepare(img: torch.Tensor, shave: int, on_luma: bool) -> torch.Tensor:
    if on_luma:
        img = to_luma(img)
    if shave > 0:
        h, w = img.shape[-2], img.shape[-1]
        if h - 2 * shave < 1 or w - 2 * shave < 1:
            raise TooSmall(f"shave {shave} empties a {h}x{w} image")
        img = img[:, shave : h - shave, shave : w - shave]
    return quantize8(img.clamp(0.0, 1.0))


def evaluate(
    sr_dir: str | Path,
    hr_dir: str | Path,
    shave: int = 4,
    on_luma: bool = True,
) -> MetricReport:
    """Score every same-named PNG pair under two directories.

    Files present on only one side are listed in ``missing`` and excluded;
    per-image failures (e.g. a shave that empties the image) land in
    ``errors``. Means are over the successfully scored images, accumulated in
    sorted filename order.
    """
    sr_dir, hr_dir = Path(sr_dir), Path(hr_dir)
    sr_names = {p.name for p in sr_dir.glob("*.png")}
    hr_names = {p.name for p in hr_dir.glob("*.png")}
    missing = sorted(
        [f"sr:{n}" for n in hr_names - sr_names]
        + [f"hr:{n}" for n in sr_names - hr_names]
    )

    scores: list[ImageScore] = []
    errors: list[tuple[str, str]] = []
    for name in sorted(sr_names & hr_names):
        try:
            sr = _prepare(load_image(sr_dir / name), shave, on_luma)
            hr = _prepare(load_image(hr_dir / name), shave, on_luma)
            if sr.shape != hr.shape:
                raise ShapeError(
                    f"{tuple(sr.shape)} vs {tuple(hr.shape)} after shave"
                )
            p = psnr(sr, hr, peak=1.0)
            if on_luma:
                s = ssim(sr, hr)
            else:
                s = sum(ssim(sr[c], hr[c]) for c in range(sr.shape[0])) / sr.shape[0]
            scores.append(ImageScore(name=name, psnr_db=p, ssim=s))
        except (ShapeError, TooSmall, OSError) as exc:
            errors.append((name, str(exc)))

    mean_psnr = sum(s.psnr_db for s in scores) / len(scores) if scores else float("nan")
    mean_ssim = sum(s.ssim for s in scores) / len(scores) if scores else float("nan")
    return MetricReport(
        scores=scores,
        mean_psnr=mean_psnr,
        mean_ssim=mean_ssim,
        shave=shave,
        on_luma=on_luma,
        missing=missing,
        errors=errors,
    )


def format_table(report: MetricReport) -> str:
    lines = [f"{'image':<32} {'PSNR(dB)':>10} {'SSIM':>8}"]
    for s in report.scores:
        lines.append(f"{s.name:<32} {s.psnr_db:>10.4f} {s.ssim:>8.4f}")
    lines.append(f"{'mean':<32} {report.mean_psnr:>10.4f} {report.mean_ssim:>8.4f}")
    for name in report.missing:
        lines.append(f"missing counterpart: {name}")
    for name, msg in report.errors:
        lines.append(f"error: {name}: {msg}")
    return "\n".join(lines)


def format_tsv(report: MetricReport) -> str:
    lines = [f"{s.name}\t{s.psnr_db!r}\t{s.ssim!r}" for s in report.scores]
    lines.append(f"mean\t{report.mean_psnr!r}\t{report.mean_ssim!r}")
    return "\n".join(lines)
