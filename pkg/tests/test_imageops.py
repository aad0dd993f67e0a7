"""Image contract validation, luma, quantization, PNG round trips."""

import pytest
import torch

from dcrsr.data import PairedSample
from dcrsr.exceptions import ShapeError
from dcrsr.imageops import (
    load_image,
    quantize8,
    require_chw,
    require_image,
    save_image,
    to_luma,
)


def test_require_chw(rng):
    require_chw(torch.rand(3, 4, 5, generator=rng))
    with pytest.raises(ShapeError):
        require_chw(torch.rand(4, 5, generator=rng))
    with pytest.raises(ShapeError):
        require_chw(torch.empty(3, 0, 5))


def test_require_image_channel_and_range(rng):
    require_image(torch.rand(3, 4, 4, generator=rng))
    require_image(torch.rand(1, 4, 4, generator=rng))
    with pytest.raises(ShapeError):
        require_image(torch.rand(2, 4, 4, generator=rng))  # channels not in {1,3}
    with pytest.raises(ShapeError):
        require_image(torch.rand(3, 4, 4, generator=rng) + 1.0)  # above 1
    with pytest.raises(ShapeError):
        require_image(torch.rand(3, 4, 4, generator=rng) - 1.0)  # below 0
    with pytest.raises(ShapeError):
        require_image(torch.full((3, 2, 2), float("nan")))


def test_to_luma_bt601_weights():
    img = torch.zeros(3, 2, 2)
    img[0] = 1.0
    assert to_luma(img)[0, 0, 0].item() == pytest.approx(0.299)
    img = torch.zeros(3, 2, 2)
    img[1] = 1.0
    assert to_luma(img)[0, 0, 0].item() == pytest.approx(0.587)
    white = torch.ones(3, 2, 2)
    assert to_luma(white)[0, 0, 0].item() == pytest.approx(1.0)
    with pytest.raises(ShapeError):
        to_luma(torch.rand(1, 2, 2))


def test_quantize8_idempotent(rng):
    x = torch.rand(3, 6, 6, generator=rng)
    q = quantize8(x)
    assert torch.equal(quantize8(q), q)
    assert (q - x).abs().max() <= 0.5 / 255 + 1e-7


def test_png_round_trip_preserves_8bit_values(tmp_path, rng):
    img = quantize8(torch.rand(3, 9, 7, generator=rng))
    path = tmp_path / "x.png"
    save_image(img, path)
    back = load_image(path)
    assert back.shape == img.shape
    assert (back - img).abs().max() < 1e-6


def test_paired_sample_validation(rng):
    good = PairedSample(hr=torch.rand(3, 16, 16, generator=rng),
                        lr=torch.rand(3, 4, 4, generator=rng), scale=4)
    good.validate()
    bad = PairedSample(hr=torch.rand(3, 16, 15, generator=rng),
                       lr=torch.rand(3, 4, 4, generator=rng), scale=4)
    with pytest.raises(ShapeError):
        bad.validate()
