"""Training objectives for both stages.

Stage 1 (auto-encoding): pixel reconstruction, content consistency between a
photo and its edge map, and an adversarial term on the reconstructions.
Stage 2 (triplet fine-tuning): content/style regularization of the re-encoded
output plus an adversarial term on the synthesized photos.

All expectations are batch means and all per-element distances are means, so
the loss weights stay meaningful across image sizes. The discriminator output
is a logit; adversarial terms use the softplus form of the logistic loss for
numerical stability.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import torch
import torch.nn.functional as F

from .errors import ContractError, InvalidInputError, ShapeMismatchError


@dataclass(frozen=True)
class LossWeights:
    """Weights of the adversarial and content terms in the stage totals."""

    theta: float = 0.5  # content consistency weight (stage 1)
    alpha: float = 0.5  # adversarial weight (stage 1)
    beta: float = 0.5  # adversarial weight (stage 2)

    def __post_init__(self):
        for name in ("theta", "alpha", "beta"):
            if getattr(self, name) < 0:
                raise InvalidInputError(f"loss weight {name} must be >= 0")


@dataclass
class LossReport:
    """Named scalar losses for one step; ``total`` is the active stage's sum."""

    rec: float | None = None
    content: float | None = None
    gan_g: float | None = None
    gan_d: float | None = None
    reg_content: float | None = None
    reg_style: float | None = None
    total: float | None = None

    def to_json_line(self, **extra) -> str:
        record = {k: v for k, v in asdict(self).items() if v is not None}
        record.update(extra)
        return json.dumps(record, sort_keys=True)


def _check_same_shape(a: torch.Tensor, b: torch.Tensor, what: str) -> None:
    if a.shape != b.shape:
        raise ShapeMismatchError(f"{what}: shape {tuple(a.shape)} vs {tuple(b.shape)}")


def loss_reconstruction(
    x: torch.Tensor, x_edge: torch.Tensor, recon_x: torch.Tensor, recon_edge: torch.Tensor
) -> torch.Tensor:
    """Mean absolute reconstruction error of the photo plus that of its edge map."""
    _check_same_shape(x, recon_x, "photo reconstruction")
    _check_same_shape(x_edge, recon_edge, "edge reconstruction")
    return (x - recon_x).abs().mean() + (x_edge - recon_edge).abs().mean()


def loss_content(c_a: torch.Tensor, c_b: torch.Tensor) -> torch.Tensor:
    """Mean absolute distance between two content grids; symmetric."""
    _check_same_shape(c_a, c_b, "content codes")
    return (c_a - c_b).abs().mean()


def loss_gan_generator(fake_logits: torch.Tensor) -> torch.Tensor:
    """Non-saturating generator loss: mean softplus(-logit) over fake scores."""
    if not torch.isfinite(fake_logits).all():
        raise InvalidInputError("fake logits contain non-finite values")
    return F.softplus(-fake_logits).mean()


def loss_gan_discriminator(real_logits: torch.Tensor, fake_logits: torch.Tensor) -> torch.Tensor:
    """Logistic discriminator loss: push real logits up and fake logits down."""
    if not (torch.isfinite(real_logits).all() and torch.isfinite(fake_logits).all()):
        raise InvalidInputError("logits contain non-finite values")
    return F.softplus(-real_logits).mean() + F.softplus(fake_logits).mean()


def loss_regularization(
    c_out: torch.Tensor, c_sketch: torch.Tensor, s_out: torch.Tensor, s_ref: torch.Tensor
) -> tuple[torch.Tensor, torch.Tensor]:
    """Content and style pull-back terms for the synthesized output.

    Returns (mean |c_out − c_sketch|, mean |s_out − s_ref|).
    """
    _check_same_shape(c_out, c_sketch, "content regularization")
    _check_same_shape(s_out, s_ref, "style regularization")
    return (c_out - c_sketch).abs().mean(), (s_out - s_ref).abs().mean()


def r1_penalty(real_logits: torch.Tensor, real_images: torch.Tensor) -> torch.Tensor:
    """Gradient penalty on real images; optional stabilizer, off by default."""
    grads = torch.autograd.grad(real_logits.sum(), real_images, create_graph=True)[0]
    return grads.pow(2).sum(dim=(1, 2, 3)).mean()


def _require(parts: LossReport, names: tuple[str, ...]) -> None:
    missing = [n for n in names if getattr(parts, n) is None]
    if missing:
        raise ContractError(f"loss report is missing {missing} for this stage total")


def total_stage1(parts: LossReport, w: LossWeights) -> float:
    """rec + theta*content + alpha*gan_g."""
    _require(parts, ("rec", "content", "gan_g"))
    return parts.rec + w.theta * parts.content + w.alpha * parts.gan_g


def total_stage2(parts: LossReport, w: LossWeights) -> float:
    """(reg_content + reg_style) + beta*gan_g."""
    _require(parts, ("reg_content", "reg_style", "gan_g"))
    return (parts.reg_content + parts.reg_style) + w.beta * parts.gan_g
