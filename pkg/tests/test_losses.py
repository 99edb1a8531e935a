import math

import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from sketchsynth.errors import ContractError, InvalidInputError, ShapeMismatchError
from sketchsynth.losses import (
    LossReport,
    LossWeights,
    loss_content,
    loss_gan_discriminator,
    loss_gan_generator,
    loss_reconstruction,
    loss_regularization,
    total_stage1,
    total_stage2,
)

from oracles import discriminator_loss_mp, generator_loss_mp, mean_abs_mp


def rand64(rng, *shape):
    return torch.from_numpy(rng.random(shape))


# --- reconstruction -----------------------------------------------------------


def test_reconstruction_zero_for_perfect():
    rng = np.random.default_rng(0)
    x = rand64(rng, 2, 3, 8, 8)
    e = rand64(rng, 2, 3, 8, 8)
    assert loss_reconstruction(x, e, x.clone(), e.clone()).item() == 0.0


def test_reconstruction_constant_offset():
    rng = np.random.default_rng(1)
    x = rand64(rng, 2, 3, 8, 8) * 0.5 + 0.2
    e = rand64(rng, 2, 3, 8, 8)
    out = loss_reconstruction(x, e, x + 0.1, e.clone())
    assert out.item() == pytest.approx(0.1, abs=1e-12)


def test_reconstruction_shape_error():
    x = torch.zeros(2, 3, 8, 8)
    with pytest.raises(ShapeMismatchError):
        loss_reconstruction(x, x, torch.zeros(2, 3, 8, 7), x)


# --- content ----------------------------------------------------------------------


def test_content_zero_and_offset():
    rng = np.random.default_rng(2)
    c = rand64(rng, 2, 4, 4, 4)
    assert loss_content(c, c.clone()).item() == 0.0
    assert loss_content(c, c + 1.0).item() == pytest.approx(1.0, abs=1e-12)


def test_content_symmetry():
    rng = np.random.default_rng(3)
    a, b = rand64(rng, 2, 4, 4, 4), rand64(rng, 2, 4, 4, 4)
    assert loss_content(a, b).item() == loss_content(b, a).item()


# --- adversarial --------------------------------------------------------------------


def test_generator_loss_reference_points():
    assert loss_gan_generator(torch.zeros(4, dtype=torch.float64)).item() == pytest.approx(
        math.log(2.0), abs=1e-12
    )
    assert loss_gan_generator(torch.full((3,), 20.0, dtype=torch.float64)).item() <= 1e-8


def test_discriminator_loss_reference_points():
    perfect = loss_gan_discriminator(
        torch.full((3,), 20.0, dtype=torch.float64), torch.full((3,), -20.0, dtype=torch.float64)
    )
    assert perfect.item() <= 1e-8
    at_zero = loss_gan_discriminator(torch.zeros(5, dtype=torch.float64), torch.zeros(5, dtype=torch.float64))
    assert at_zero.item() == pytest.approx(2.0 * math.log(2.0), abs=1e-12)


def test_adversarial_losses_finite_for_extreme_logits():
    logits = torch.tensor([-100.0, -50.0, 0.0, 50.0, 100.0], dtype=torch.float64)
    assert torch.isfinite(loss_gan_generator(logits))
    assert torch.isfinite(loss_gan_discriminator(logits, logits))


def test_adversarial_losses_reject_nonfinite():
    with pytest.raises(InvalidInputError):
        loss_gan_generator(torch.tensor([float("nan")]))
    with pytest.raises(InvalidInputError):
        loss_gan_discriminator(torch.tensor([float("inf")]), torch.zeros(1))


# --- regularization -----------------------------------------------------------------


def test_regularization_reference_points():
    rng = np.random.default_rng(4)
    c = rand64(rng, 2, 4, 3, 3)
    s = rand64(rng, 2, 16)
    rc, rs = loss_regularization(c, c.clone(), s, s.clone())
    assert rc.item() == 0.0 and rs.item() == 0.0
    rc, rs = loss_regularization(c + 2.0, c, s, s.clone())
    assert rc.item() == pytest.approx(2.0, abs=1e-12)
    assert rs.item() == 0.0


# --- high-precision oracle sweep ------------------------------------------------------


def test_losses_match_high_precision_oracle():
    """100 random inputs per operation, max abs error ≤ 1e-6 (actual: ~1e-15)."""
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(100):
        x = rng.random((2, 3, 6, 6))
        e = rng.random((2, 3, 6, 6))
        rx = rng.random((2, 3, 6, 6))
        re = rng.random((2, 3, 6, 6))
        got = loss_reconstruction(*map(torch.from_numpy, (x, e, rx, re))).item()
        want = mean_abs_mp(x, rx) + mean_abs_mp(e, re)
        worst = max(worst, abs(got - want))

        ca, cb = rng.standard_normal((2, 4, 4, 4)), rng.standard_normal((2, 4, 4, 4))
        got = loss_content(torch.from_numpy(ca), torch.from_numpy(cb)).item()
        worst = max(worst, abs(got - mean_abs_mp(ca, cb)))

        logits = rng.standard_normal(16) * 30.0
        got = loss_gan_generator(torch.from_numpy(logits)).item()
        worst = max(worst, abs(got - generator_loss_mp(logits)))

        real = rng.standard_normal(16) * 30.0
        fake = rng.standard_normal(16) * 30.0
        got = loss_gan_discriminator(torch.from_numpy(real), torch.from_numpy(fake)).item()
        worst = max(worst, abs(got - discriminator_loss_mp(real, fake)))

        co, ck = rng.standard_normal((2, 4, 3, 3)), rng.standard_normal((2, 4, 3, 3))
        so, sr = rng.standard_normal((2, 8)), rng.standard_normal((2, 8))
        rc, rs = loss_regularization(*map(torch.from_numpy, (co, ck, so, sr)))
        worst = max(worst, abs(rc.item() - mean_abs_mp(co, ck)))
        worst = max(worst, abs(rs.item() - mean_abs_mp(so, sr)))
    assert worst <= 1e-6


# --- totals ------------------------------------------------------------------------


def test_total_stage1_values():
    parts = LossReport(rec=1.0, content=1.0, gan_g=1.0)
    assert total_stage1(parts, LossWeights()) == 2.0
    assert total_stage1(parts, LossWeights(theta=0.0, alpha=0.0)) == 1.0


def test_total_stage2_values():
    parts = LossReport(reg_content=1.0, reg_style=1.0, gan_g=1.0)
    assert total_stage2(parts, LossWeights()) == 2.5
    assert total_stage2(parts, LossWeights(beta=0.0)) == 2.0


def test_total_random_matches_scalar_oracle():
    rng = np.random.default_rng(6)
    for _ in range(100):
        rec, content, gan = rng.random(3)
        theta, alpha, beta = rng.random(3)
        w = LossWeights(theta=theta, alpha=alpha, beta=beta)
        got = total_stage1(LossReport(rec=rec, content=content, gan_g=gan), w)
        assert got == rec + theta * content + alpha * gan
        rc, rs = rng.random(2)
        got2 = total_stage2(LossReport(reg_content=rc, reg_style=rs, gan_g=gan), w)
        assert got2 == (rc + rs) + beta * gan


def test_total_missing_parts_raise():
    with pytest.raises(ContractError):
        total_stage1(LossReport(rec=1.0), LossWeights())
    with pytest.raises(ContractError):
        total_stage2(LossReport(gan_g=1.0), LossWeights())


def test_weights_must_be_nonnegative():
    with pytest.raises(InvalidInputError):
        LossWeights(theta=-0.1)


def test_report_serializes_to_json_line():
    import json

    line = LossReport(rec=0.5, content=0.25, gan_g=1.0, gan_d=2.0, total=1.125).to_json_line(step=7)
    record = json.loads(line)
    assert record["step"] == 7 and record["rec"] == 0.5
    assert "reg_content" not in record


# --- property tests --------------------------------------------------------------------


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_nonnegativity_properties(seed):
    rng = np.random.default_rng(seed)
    a, b = rand64(rng, 1, 2, 4, 4), rand64(rng, 1, 2, 4, 4)
    assert loss_content(a, b).item() >= 0.0
    logits = torch.from_numpy(rng.standard_normal(8) * 50)
    assert loss_gan_generator(logits).item() >= 0.0
    assert loss_gan_discriminator(logits, -logits).item() >= 0.0


# --- gradient checks (also exercised by the acceptance suite) ----------------------------


def finite_difference_check(loss_fn, *tensors, rtol=1e-4):
    from oracles import central_difference_grad, max_relative_error

    tensors = [t.clone().requires_grad_(True) for t in tensors]
    loss = loss_fn(*tensors)
    grads = torch.autograd.grad(loss, tensors, allow_unused=False)
    for t, g in zip(tensors, grads):
        numeric = central_difference_grad(lambda: loss_fn(*tensors), t, eps=1e-6)
        assert max_relative_error(g.numpy(), numeric, floor=1e-4) <= rtol


def test_loss_gradients_match_finite_differences():
    rng = np.random.default_rng(7)
    x, e, rx, re = (rand64(rng, 1, 2, 4, 4) for _ in range(4))
    finite_difference_check(loss_reconstruction, x, e, rx, re)
    finite_difference_check(loss_content, rand64(rng, 1, 3, 4, 4), rand64(rng, 1, 3, 4, 4))
    finite_difference_check(loss_gan_generator, torch.from_numpy(rng.standard_normal(8)))
    finite_difference_check(
        loss_gan_discriminator,
        torch.from_numpy(rng.standard_normal(8)),
        torch.from_numpy(rng.standard_normal(8)),
    )
    co, ck = rand64(rng, 1, 3, 3, 3), rand64(rng, 1, 3, 3, 3)
    so, sr = rand64(rng, 1, 8), rand64(rng, 1, 8)
    finite_difference_check(lambda *ts: sum(loss_regularization(*ts)), co, ck, so, sr)
