"""Encoder, decoder, and discriminator.

The encoder splits an image into a spatial content grid (scene structure) and
a flat style vector (color/texture statistics). The decoder rebuilds an image
from the pair, injecting style into every convolution through per-input-channel
weight modulation with optional demodulation. The discriminator scores realism
with a strided residual stack ending in a scalar logit.

Edge maps are single-channel; the shared encoder/decoder/discriminator operate
on 3-channel tensors, so edge maps are replicated across channels at the
boundary (``image_to_tensor``).
"""

from __future__ import annotations

import math
import os
import tempfile
from dataclasses import asdict, dataclass

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from .errors import CheckpointFormatError, InvalidInputError, ShapeMismatchError

CHECKPOINT_FORMAT_VERSION = 1


@dataclass(frozen=True)
class ArchConfig:
    """Architecture hyperparameters; shapes below follow from these.

    The trunk resolution after ``num_down_blocks`` stride-2 blocks must equal
    ``content_spatial``, and ``content_spatial * 2**num_up_blocks`` must equal
    ``image_size`` again.
    """

    image_size: int = 256
    num_down_blocks: int = 4
    num_up_blocks: int = 4
    content_spatial: int = 16
    content_channels: int = 512
    style_dim: int = 2048
    base_channels: int = 64
    max_channels: int = 512
    disc_base_channels: int | None = None  # None: same width as the encoder
    demodulate: bool = True
    epsilon: float = 1e-8

    def __post_init__(self):
        if self.epsilon <= 0:
            raise InvalidInputError(f"epsilon must be > 0, got {self.epsilon}")
        trunk = self.image_size // (2**self.num_down_blocks)
        if trunk != self.content_spatial or trunk * 2**self.num_down_blocks != self.image_size:
            raise InvalidInputError(
                f"image_size {self.image_size} with {self.num_down_blocks} down blocks "
                f"gives a {trunk}×{trunk} trunk, but content_spatial is {self.content_spatial}"
            )
        if self.content_spatial * 2**self.num_up_blocks != self.image_size:
            raise InvalidInputError(
                f"content_spatial {self.content_spatial} with {self.num_up_blocks} up blocks "
                f"does not reach image_size {self.image_size}"
            )

    def channels_at(self, level: int) -> int:
        return min(self.base_channels * 2**level, self.max_channels)

    def disc_channels_at(self, level: int) -> int:
        base = self.disc_base_channels or self.base_channels
        return min(base * 2**level, self.max_channels)

    @property
    def trunk_channels(self) -> int:
        return self.channels_at(self.num_down_blocks)


def desk_config(image_size: int = 64, base_channels: int = 32) -> ArchConfig:
    """Small configuration that trains in minutes on a CPU."""
    blocks = max(1, int(math.log2(image_size // 16)))
    return ArchConfig(
        image_size=image_size,
        num_down_blocks=blocks,
        num_up_blocks=blocks,
        content_spatial=image_size // 2**blocks,
        content_channels=64,
        style_dim=128,
        base_channels=base_channels,
        max_channels=256,
        disc_base_channels=max(base_channels // 2, 8),
    )


def modulated_conv(
    features: torch.Tensor,
    weight: torch.Tensor,
    style_scales: torch.Tensor,
    demodulate: bool,
    epsilon: float,
    padding: int | None = None,
) -> torch.Tensor:
    """Convolution with per-input-channel weight scaling.

    Scales multiply the kernel along its input-channel axis; with
    ``demodulate`` each output filter is renormalized by the root sum of
    squares of its scaled weights (plus ``epsilon``), keeping output
    magnitudes near unit scale. ``style_scales`` may be per-batch-item
    (N×C_in) or shared (C_in,).
    """
    if features.dim() != 4:
        raise ShapeMismatchError(f"features must be N×C×H×W, got shape {tuple(features.shape)}")
    n, c_in, h, w = features.shape
    c_out, c_in_w, kh, kw = weight.shape
    if c_in_w != c_in:
        raise ShapeMismatchError(f"kernel expects {c_in_w} input channels, features have {c_in}")
    shared = style_scales.dim() == 1
    if not shared and style_scales.shape != (n, c_in):
        raise ShapeMismatchError(
            f"style_scales must have shape ({n}, {c_in}) or ({c_in},), got {tuple(style_scales.shape)}"
        )
    if shared and style_scales.shape != (c_in,):
        raise ShapeMismatchError(
            f"style_scales must have shape ({n}, {c_in}) or ({c_in},), got {tuple(style_scales.shape)}"
        )
    if padding is None:
        padding = kh // 2

    if shared:
        # one kernel for the whole batch: a single plain convolution
        w_mod = weight * style_scales.view(1, c_in, 1, 1)
        if demodulate:
            denom = torch.sqrt(w_mod.pow(2).sum(dim=(1, 2, 3)) + epsilon)
            w_mod = w_mod / denom.view(c_out, 1, 1, 1)
        return F.conv2d(features, w_mod, padding=padding)

    # Per-sample kernels, computed without a grouped convolution: scaling the
    # kernel's input channels equals scaling the input features, and the
    # demodulation factor only depends on (sample, output channel), so one
    # plain convolution plus two elementwise scalings gives the same result.
    out = F.conv2d(features * style_scales.view(n, c_in, 1, 1), weight, padding=padding)
    if demodulate:
        w_sq = weight.pow(2).sum(dim=(2, 3))  # c_out × c_in
        denom = torch.sqrt(style_scales.pow(2) @ w_sq.t() + epsilon)  # n × c_out
        out = out / denom.view(n, c_out, 1, 1)
    return out


class ModulatedConv2d(nn.Module):
    """Conv layer whose kernel is modulated by an affine map of the style vector."""

    def __init__(self, in_channels, out_channels, kernel_size, style_dim, demodulate=True, epsilon=1e-8):
        super().__init__()
        self.demodulate = demodulate
        self.epsilon = epsilon
        self.weight = nn.Parameter(torch.empty(out_channels, in_channels, kernel_size, kernel_size))
        nn.init.kaiming_normal_(self.weight, a=0.2)
        self.bias = nn.Parameter(torch.zeros(out_channels))
        self.affine = nn.Linear(style_dim, in_channels)
        nn.init.normal_(self.affine.weight, std=0.02)
        nn.init.ones_(self.affine.bias)

    def forward(self, x, style):
        scales = self.affine(style)
        out = modulated_conv(x, self.weight, scales, self.demodulate, self.epsilon)
        return out + self.bias.view(1, -1, 1, 1)


def _spectral(module: nn.Module) -> nn.Module:
    return nn.utils.parametrizations.spectral_norm(module)


class DownBlock(nn.Module):
    """Residual block halving spatial size; instance norm optional.

    ``spectral`` wraps the convolutions in spectral normalization, which the
    discriminator needs for a bounded logit scale (its training uses no
    gradient penalty by default).
    """

    def __init__(self, in_channels, out_channels, norm=True, spectral=False):
        super().__init__()
        wrap = _spectral if spectral else (lambda m: m)
        self.conv1 = wrap(nn.Conv2d(in_channels, out_channels, 3, padding=1))
        self.conv2 = wrap(nn.Conv2d(out_channels, out_channels, 3, stride=2, padding=1))
        self.skip = wrap(nn.Conv2d(in_channels, out_channels, 1))
        self.norm1 = nn.InstanceNorm2d(out_channels, affine=True) if norm else nn.Identity()
        self.norm2 = nn.InstanceNorm2d(out_channels, affine=True) if norm else nn.Identity()

    def forward(self, x):
        h = F.leaky_relu(self.norm1(self.conv1(x)), 0.2, inplace=True)
        h = F.leaky_relu(self.norm2(self.conv2(h)), 0.2, inplace=True)
        s = self.skip(F.avg_pool2d(x, 2))
        return (h + s) / math.sqrt(2.0)


class UpBlock(nn.Module):
    """Residual block doubling spatial size with style-modulated convolutions."""

    def __init__(self, in_channels, out_channels, style_dim, demodulate, epsilon):
        super().__init__()
        self.conv1 = ModulatedConv2d(in_channels, out_channels, 3, style_dim, demodulate, epsilon)
        self.conv2 = ModulatedConv2d(out_channels, out_channels, 3, style_dim, demodulate, epsilon)
        self.skip = nn.Conv2d(in_channels, out_channels, 1)

    def forward(self, x, style):
        x = F.interpolate(x, scale_factor=2, mode="nearest")
        h = F.leaky_relu(self.conv1(x, style), 0.2, inplace=True)
        h = F.leaky_relu(self.conv2(h, style), 0.2, inplace=True)
        return (h + self.skip(x)) / math.sqrt(2.0)


class Encoder(nn.Module):
    """Shared encoder for photos and edge maps: trunk → (content grid, style vector)."""

    def __init__(self, arch: ArchConfig):
        super().__init__()
        self.arch = arch
        self.stem = nn.Conv2d(3, arch.channels_at(0), 3, padding=1)
        self.blocks = nn.ModuleList(
            DownBlock(arch.channels_at(i), arch.channels_at(i + 1)) for i in range(arch.num_down_blocks)
        )
        trunk = arch.trunk_channels
        self.content_head = nn.Conv2d(trunk, arch.content_channels, 3, padding=1)
        self.style_conv = nn.Conv2d(trunk, trunk, 3, padding=1)
        self.style_out = nn.Linear(trunk, arch.style_dim)

    def forward(self, x: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        h = F.leaky_relu(self.stem(x), 0.2, inplace=True)
        for block in self.blocks:
            h = block(h)
        content = self.content_head(h)
        s = F.leaky_relu(self.style_conv(h), 0.2)
        s = s.mean(dim=(2, 3))
        style = self.style_out(s)
        return content, style


class Decoder(nn.Module):
    """Style-modulated decoder from a content grid back to an image in [0, 1]."""

    def __init__(self, arch: ArchConfig):
        super().__init__()
        self.arch = arch
        trunk = arch.trunk_channels
        self.stem = ModulatedConv2d(arch.content_channels, trunk, 3, arch.style_dim, arch.demodulate, arch.epsilon)
        channels = [trunk] + [arch.channels_at(arch.num_up_blocks - 1 - i) for i in range(arch.num_up_blocks)]
        self.blocks = nn.ModuleList(
            UpBlock(channels[i], channels[i + 1], arch.style_dim, arch.demodulate, arch.epsilon)
            for i in range(arch.num_up_blocks)
        )
        self.to_rgb = ModulatedConv2d(channels[-1], 3, 1, arch.style_dim, demodulate=False, epsilon=arch.epsilon)

    def forward(self, content: torch.Tensor, style: torch.Tensor) -> torch.Tensor:
        h = F.leaky_relu(self.stem(content, style), 0.2, inplace=True)
        for block in self.blocks:
            h = block(h, style)
        return torch.sigmoid(self.to_rgb(h, style))


class Discriminator(nn.Module):
    """Strided residual stack mapping an image to one realism logit.

    All layers carry spectral normalization: without a gradient penalty the
    logit scale must be bounded architecturally or adversarial training at
    the default learning rate diverges.
    """

    def __init__(self, arch: ArchConfig):
        super().__init__()
        self.arch = arch
        n_blocks = max(1, int(math.log2(arch.image_size // 4)))
        self.stem = _spectral(nn.Conv2d(3, arch.disc_channels_at(0), 3, padding=1))
        self.blocks = nn.ModuleList(
            DownBlock(arch.disc_channels_at(i), arch.disc_channels_at(i + 1), norm=False, spectral=True)
            for i in range(n_blocks)
        )
        final = arch.disc_channels_at(n_blocks)
        final_res = arch.image_size // 2**n_blocks
        self.conv = _spectral(nn.Conv2d(final, final, 3, padding=1))
        self.fc1 = _spectral(nn.Linear(final * final_res * final_res, final))
        self.fc2 = _spectral(nn.Linear(final, 1))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h = F.leaky_relu(self.stem(x), 0.2, inplace=True)
        for block in self.blocks:
            h = block(h)
        h = F.leaky_relu(self.conv(h), 0.2, inplace=True)
        h = F.leaky_relu(self.fc1(h.flatten(1)), 0.2, inplace=True)
        return self.fc2(h).squeeze(1)


@dataclass
class ModelBundle:
    """Encoder/decoder/discriminator plus their architecture and provenance."""

    encoder: Encoder
    decoder: Decoder
    discriminator: Discriminator
    arch: ArchConfig
    training_stage: str = "stage1"
    format_version: int = CHECKPOINT_FORMAT_VERSION

    def eval_mode(self) -> "ModelBundle":
        self.encoder.eval()
        self.decoder.eval()
        self.discriminator.eval()
        return self

    def train_mode(self) -> "ModelBundle":
        self.encoder.train()
        self.decoder.train()
        self.discriminator.train()
        return self

    def parameters(self):
        yield from self.encoder.parameters()
        yield from self.decoder.parameters()
        yield from self.discriminator.parameters()

    def assert_finite(self) -> None:
        for name, module in (
            ("encoder", self.encoder),
            ("decoder", self.decoder),
            ("discriminator", self.discriminator),
        ):
            for pname, p in module.named_parameters():
                if not torch.isfinite(p).all():
                    raise InvalidInputError(f"non-finite parameter {name}.{pname}")


def build_model(arch: ArchConfig, seed: int = 0) -> ModelBundle:
    """Construct a bundle with deterministic parameter initialization."""
    gen_state = torch.get_rng_state()
    try:
        torch.manual_seed(seed)
        bundle = ModelBundle(Encoder(arch), Decoder(arch), Discriminator(arch), arch)
    finally:
        torch.set_rng_state(gen_state)
    return bundle


# --- numpy boundary -------------------------------------------------------


def image_to_tensor(image: np.ndarray) -> torch.Tensor:
    """H×W or H×W×3 float image → 1×3×H×W tensor (edge maps replicated)."""
    arr = np.asarray(image, dtype=np.float32)
    if arr.ndim == 2:
        arr = np.repeat(arr[None, :, :], 3, axis=0)
    elif arr.ndim == 3 and arr.shape[2] == 3:
        arr = arr.transpose(2, 0, 1)
    else:
        raise ShapeMismatchError(f"expected H×W or H×W×3 image, got shape {arr.shape}")
    return torch.from_numpy(arr.copy()).unsqueeze(0)


def tensor_to_image(tensor: torch.Tensor) -> np.ndarray:
    """1×3×H×W or 3×H×W tensor → H×W×3 float32 image clamped to [0, 1]."""
    if tensor.dim() == 4:
        if tensor.shape[0] != 1:
            raise ShapeMismatchError("tensor_to_image expects a single image")
        tensor = tensor[0]
    arr = tensor.detach().clamp(0.0, 1.0).cpu().numpy().astype(np.float32)
    return arr.transpose(1, 2, 0)


def _check_model_input(image: np.ndarray, arch: ArchConfig) -> torch.Tensor:
    arr = np.asarray(image)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("image contains non-finite values")
    x = image_to_tensor(arr.astype(np.float32))
    if x.shape[2] != arch.image_size or x.shape[3] != arch.image_size:
        raise ShapeMismatchError(
            f"model expects {arch.image_size}×{arch.image_size} input, got {x.shape[2]}×{x.shape[3]}"
        )
    return x


def encode(image: np.ndarray, model: ModelBundle) -> tuple[np.ndarray, np.ndarray]:
    """Encode one image (photo or edge map) into (content grid, style vector).

    Content comes back as S×S×C_c, style as a flat vector; both float32.
    """
    x = _check_model_input(image, model.arch)
    model.encoder.eval()
    with torch.no_grad():
        content, style = model.encoder(x)
    return (
        content[0].permute(1, 2, 0).numpy().astype(np.float32),
        style[0].numpy().astype(np.float32),
    )


def decode(content: np.ndarray, style: np.ndarray, model: ModelBundle) -> np.ndarray:
    """Decode a (content grid, style vector) pair back to an H×W×3 image."""
    arch = model.arch
    content = np.asarray(content, dtype=np.float32)
    style = np.asarray(style, dtype=np.float32)
    if content.shape != (arch.content_spatial, arch.content_spatial, arch.content_channels):
        raise ShapeMismatchError(
            f"content grid must be {arch.content_spatial}×{arch.content_spatial}×{arch.content_channels}, "
            f"got {content.shape}"
        )
    if style.shape != (arch.style_dim,):
        raise ShapeMismatchError(f"style vector must have dimension {arch.style_dim}, got {style.shape}")
    c = torch.from_numpy(content.transpose(2, 0, 1).copy()).unsqueeze(0)
    s = torch.from_numpy(style.copy()).unsqueeze(0)
    model.decoder.eval()
    with torch.no_grad():
        out = model.decoder(c, s)
    return tensor_to_image(out)


def discriminate(image: np.ndarray, model: ModelBundle) -> float:
    """Realism logit for one image."""
    x = _check_model_input(image, model.arch)
    model.discriminator.eval()
    with torch.no_grad():
        logit = model.discriminator(x)
    return float(logit[0])


# --- checkpoints ----------------------------------------------------------


def save_checkpoint(model: ModelBundle, path, extras: dict | None = None) -> None:
    """Atomically write the bundle (and optional trainer state) to ``path``."""
    payload = {
        "format_version": model.format_version,
        "arch": asdict(model.arch),
        "training_stage": model.training_stage,
        "encoder": model.encoder.state_dict(),
        "decoder": model.decoder.state_dict(),
        "discriminator": model.discriminator.state_dict(),
        "extras": extras or {},
    }
    path = os.fspath(path)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            torch.save(payload, fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_checkpoint(path, with_extras: bool = False):
    """Load a bundle; rejects files with an unknown format version."""
    try:
        payload = torch.load(os.fspath(path), map_location="cpu", weights_only=True)
    except Exception as exc:
        raise CheckpointFormatError(f"cannot read checkpoint {path}: {exc}") from exc
    version = payload.get("format_version")
    if version != CHECKPOINT_FORMAT_VERSION:
        raise CheckpointFormatError(
            f"unsupported checkpoint format_version {version!r}, expected {CHECKPOINT_FORMAT_VERSION}"
        )
    arch = ArchConfig(**payload["arch"])
    bundle = ModelBundle(
        Encoder(arch),
        Decoder(arch),
        Discriminator(arch),
        arch,
        training_stage=payload.get("training_stage", "stage1"),
    )
    bundle.encoder.load_state_dict(payload["encoder"])
    bundle.decoder.load_state_dict(payload["decoder"])
    bundle.discriminator.load_state_dict(payload["discriminator"])
    bundle.eval_mode()
    if with_extras:
        return bundle, payload.get("extras", {})
    return bundle


def clone_model(model: ModelBundle) -> ModelBundle:
    """Deep copy of the bundle (used when forking ablation runs)."""
    arch = model.arch
    out = ModelBundle(
        Encoder(arch), Decoder(arch), Discriminator(arch), arch, training_stage=model.training_stage
    )
    out.encoder.load_state_dict(model.encoder.state_dict())
    out.decoder.load_state_dict(model.decoder.state_dict())
    out.discriminator.load_state_dict(model.discriminator.state_dict())
    return out
