"""Bicubic resampling against a direct kernel-summation oracle."""

import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from dcrsr.exceptions import InvalidSize, ShapeError
from dcrsr.imageops import bicubic_resize, cubic_weight


def bicubic_oracle(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Per-pixel double loop over the 4x4 tap neighbourhood, float64."""
    c, in_h, in_w = img.shape
    out = np.zeros((c, out_h, out_w))
    for oy in range(out_h):
        sy = (oy + 0.5) * in_h / out_h - 0.5
        by = int(np.floor(sy))
        for ox in range(out_w):
            sx = (ox + 0.5) * in_w / out_w - 0.5
            bx = int(np.floor(sx))
            acc = np.zeros(c)
            for ty in range(by - 1, by + 3):
                wy = cubic_weight(np.array([sy - ty]))[0]
                cy = min(max(ty, 0), in_h - 1)
                for tx in range(bx - 1, bx + 3):
                    wx = cubic_weight(np.array([sx - tx]))[0]
                    cx = min(max(tx, 0), in_w - 1)
                    acc += wy * wx * img[:, cy, cx]
            out[:, oy, ox] = acc
    return out


def test_constant_stays_constant():
    img = torch.full((3, 5, 7), 0.5)
    out = bicubic_resize(img, 13, 9)
    assert out.shape == (3, 13, 9)
    assert (out - 0.5).abs().max() < 1e-6


def test_identity_when_size_unchanged():
    img = torch.rand(3, 11, 6)
    assert torch.equal(bicubic_resize(img, 11, 6), img)


def test_ramp_upscale_matches_kernel_sum_oracle():
    img = torch.tensor([[[0.0, 1.0], [2.0, 3.0]]]) / 3.0
    got = bicubic_resize(img.double(), 4, 4, clamp=False)
    want = bicubic_oracle(img.double().numpy(), 4, 4)
    assert np.abs(got.numpy() - want).max() < 1e-6


@pytest.mark.parametrize("shape,target", [((3, 6, 6), (9, 17)), ((1, 8, 5), (3, 20))])
def test_random_images_match_oracle(shape, target):
    img = torch.rand(*shape, dtype=torch.float64)
    got = bicubic_resize(img, *target, clamp=False)
    want = bicubic_oracle(img.numpy(), *target)
    assert np.abs(got.numpy() - want).max() < 1e-10


def test_invalid_target_size():
    with pytest.raises(InvalidSize):
        bicubic_resize(torch.rand(3, 4, 4), 0, 4)
    with pytest.raises(ShapeError):
        bicubic_resize(torch.rand(4, 4), 2, 2)


def test_clamp_behaviour():
    img = torch.zeros(1, 8, 8)
    img[0, 4, 4] = 1.0  # overshoot source
    clamped = bicubic_resize(img, 16, 16)
    assert clamped.min() >= 0.0 and clamped.max() <= 1.0
    free = bicubic_resize(img, 16, 16, clamp=False)
    assert free.min() < 0.0  # cubic lobes undershoot


def test_gradient_flows_through_resize():
    img = torch.rand(2, 6, 6, requires_grad=True)
    bicubic_resize(img, 12, 12, clamp=False).sum().backward()
    assert img.grad is not None and torch.isfinite(img.grad).all()


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 1000))
def test_translation_equivariance_on_interior(seed):
    """Shifting the input by 1 px shifts the x4 output by 4 px (away from borders)."""
    g = torch.Generator().manual_seed(seed)
    base = torch.rand(1, 17, 16, generator=g)
    a = base[:, :16, :]
    b = base[:, 1:, :]  # a shifted down by one row
    up_a = bicubic_resize(a, 64, 64, clamp=False)
    up_b = bicubic_resize(b, 64, 64, clamp=False)
    # compare interiors >= 4*4 px from the shifted borders
    inner_a = up_a[:, 20:44, 16:48]
    inner_b = up_b[:, 16:40, 16:48]
    assert (inner_a - inner_b).abs().max() < 1e-5
