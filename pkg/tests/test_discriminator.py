"""Critic: H-Swish anchors, size-agnostic scalar output, zero-network midpoint."""

import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from dcrsr.discriminator import VggStyleDiscriminator, build_discriminator, hswish
from dcrsr.exceptions import ShapeError
from dcrsr.losses import gan_losses


def test_hswish_anchors():
    assert hswish(torch.tensor(0.0)).item() == 0.0
    assert hswish(torch.tensor(3.0)).item() == pytest.approx(3.0, abs=1e-7)
    assert hswish(torch.tensor(-3.0)).item() == 0.0
    assert hswish(torch.tensor(-5.0)).item() == 0.0
    assert hswish(torch.tensor(1.0)).item() == pytest.approx(2.0 / 3.0, rel=1e-6)
    assert hswish(torch.tensor(10.0)).item() == pytest.approx(10.0, rel=1e-6)


@settings(max_examples=50, deadline=None)
@given(st.floats(-1.5, 50.0), st.floats(0.001, 10.0))
def test_hswish_monotone_right_of_its_minimum(x, step):
    # x*(x+3)/6 has its single minimum at -1.5; monotone from there on
    lo = hswish(torch.tensor(x)).item()
    hi = hswish(torch.tensor(x + step)).item()
    assert hi >= lo - 1e-9


def test_hswish_continuous_on_grid():
    xs = torch.linspace(-6.0, 8.0, 2001)
    ys = hswish(xs)
    assert (ys[1:] - ys[:-1]).abs().max() < 0.02  # no jumps at this grid step
    mono = hswish(torch.linspace(-1.5, 8.0, 2001))
    assert (mono[1:] >= mono[:-1] - 1e-7).all()


def test_conv_stack_has_thirteen_layers_with_spec_channels():
    d = VggStyleDiscriminator(base_width=64)
    outs = [c.weight.shape[0] for c in d.convs]
    assert outs == [64, 64, 128, 128, 256, 256, 256, 512, 512, 512, 512, 512, 512]
    assert d.head.weight.shape == (1, 512, 1, 1)


def test_scalar_logit_at_both_training_sizes(rng):
    d = build_discriminator(base_width=64, seed=0)
    for size in (128, 160):
        logit = d(torch.rand(3, size, size, generator=rng))
        assert logit.shape == ()
        assert torch.isfinite(logit)


def test_batched_output_arity(rng):
    d = build_discriminator(base_width=4, seed=0)
    out = d(torch.rand(5, 3, 32, 48, generator=rng))
    assert out.shape == (5,)


def test_minimum_input_size(rng):
    d = build_discriminator(base_width=4, seed=0)
    assert d(torch.rand(3, 32, 32, generator=rng)).shape == ()
    with pytest.raises(ShapeError):
        d(torch.rand(3, 31, 32, generator=rng))
    with pytest.raises(ShapeError):
        d(torch.rand(1, 32, 32, generator=rng))


def test_zero_parameters_give_midpoint_decision(rng):
    d = VggStyleDiscriminator(base_width=4)
    with torch.no_grad():
        for p in d.parameters():
            p.zero_()
    logit = d(torch.rand(3, 32, 32, generator=rng))
    assert logit.item() == 0.0
    assert torch.sigmoid(logit).item() == 0.5


def test_adversarial_gradient_finite_at_zero_head(rng):
    """D == 0.5 must not blow up the generator's adversarial gradient."""
    d = build_discriminator(base_width=4, seed=0)
    with torch.no_grad():
        d.head.weight.zero_()
        d.head.bias.zero_()
    img = torch.rand(3, 32, 32, generator=rng, requires_grad=True)
    _, loss_g = gan_losses(torch.tensor(0.0), d(img))
    loss_g.backward()
    assert torch.isfinite(img.grad).all()


def test_forward_is_deterministic(rng):
    d = build_discriminator(base_width=4, seed=0)
    x = torch.rand(3, 40, 40, generator=rng)
    assert torch.equal(d(x), d(x))
