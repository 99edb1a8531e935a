"""Two-stage adversarial training loop.

Stage 1 auto-encodes photos and their edge maps through the shared
encoder/decoder while pulling the two content codes together. Stage 2 starts
from the stage-1 weights and fine-tunes on sketch/reference triplets: the
decoder synthesizes from (sketch content, reference style) and the re-encoded
output is regularized toward those codes.

Every random draw is a pure function of (seed, step), so a run can be killed
and resumed from the last checkpoint with bit-identical results.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import torch

from . import losses as L
from .data import CorpusConfig, PairSample, pair_batch_indices, triplet_batch
from .errors import ConfigurationError, InvalidInputError, TrainingDivergedError
from .losses import LossReport, LossWeights
from .models import ModelBundle, build_model, clone_model, load_checkpoint, save_checkpoint

logger = logging.getLogger(__name__)

STAGE1_DEFAULT_LR = 2e-3
STAGE2_DEFAULT_LR = 4e-4


@dataclass(frozen=True)
class AblationFlags:
    disable_content_loss: bool = False
    disable_style_loss: bool = False
    skip_stage2: bool = False


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer settings and step budget for one training stage."""

    stage: str = "stage1"
    lr: float | None = None  # resolved per stage when None
    adam_beta1: float = 0.0
    adam_beta2: float = 0.99
    batch_size: int = 8
    max_steps: int = 2000
    weights: LossWeights = field(default_factory=LossWeights)
    ablation: AblationFlags = field(default_factory=AblationFlags)
    seed: int = 0
    checkpoint_every: int = 500
    r1_gamma: float = 0.0  # optional discriminator stabilizer, off by default
    cosine_decay: bool = False

    def __post_init__(self):
        if self.stage not in ("stage1", "stage2"):
            raise ConfigurationError(f"stage must be 'stage1' or 'stage2', got {self.stage!r}")
        if self.lr is not None and self.lr <= 0:
            raise ConfigurationError("lr must be > 0")
        for name in ("adam_beta1", "adam_beta2"):
            v = getattr(self, name)
            if not (0.0 <= v < 1.0):
                raise ConfigurationError(f"{name} must lie in [0, 1), got {v}")

    @property
    def effective_lr(self) -> float:
        if self.lr is not None:
            return self.lr
        return STAGE1_DEFAULT_LR if self.stage == "stage1" else STAGE2_DEFAULT_LR


@dataclass
class TrainState:
    """Mutable loop state: model, optimizers, step counter, metrics history."""

    model: ModelBundle
    g_opt: torch.optim.Adam | None
    d_opt: torch.optim.Adam | None
    step: int = 0
    metrics: list[LossReport] = field(default_factory=list)


def init_state(cfg: TrainConfig, model: ModelBundle | None = None) -> TrainState:
    if model is None:
        if cfg.stage == "stage2":
            raise ConfigurationError("stage2 training requires a stage-1 model or checkpoint")
        model = build_model_for(cfg)
    model.train_mode()
    lr = cfg.effective_lr
    betas = (cfg.adam_beta1, cfg.adam_beta2)
    g_opt = torch.optim.Adam(
        list(model.encoder.parameters()) + list(model.decoder.parameters()), lr=lr, betas=betas
    )
    d_opt = torch.optim.Adam(model.discriminator.parameters(), lr=lr, betas=betas)
    return TrainState(model=model, g_opt=g_opt, d_opt=d_opt)


def build_model_for(cfg: TrainConfig, arch=None) -> ModelBundle:
    from .models import desk_config

    return build_model(arch or desk_config(), seed=cfg.seed)


def _photos_tensor(batch: list[PairSample]) -> torch.Tensor:
    return torch.from_numpy(np.stack([p.photo.transpose(2, 0, 1) for p in batch]))


def _edges_tensor(edge_maps: list[np.ndarray]) -> torch.Tensor:
    return torch.from_numpy(np.stack([np.repeat(e[None, :, :], 3, axis=0) for e in edge_maps]))


def _params_finite(state: TrainState) -> bool:
    return all(torch.isfinite(p).all() for p in state.model.parameters())


def _divergence_error(parts: dict[str, float], state: TrainState, cfg: TrainConfig) -> TrainingDivergedError:
    norms = {
        f"{mod}.{name}": float(p.detach().norm())
        for mod, module in (
            ("encoder", state.model.encoder),
            ("decoder", state.model.decoder),
            ("discriminator", state.model.discriminator),
        )
        for name, p in module.named_parameters()
    }
    return TrainingDivergedError(
        f"non-finite loss at step {state.step + 1}",
        diagnostics={"step": state.step + 1, "losses": parts, "parameter_norms": norms, "stage": cfg.stage},
    )


def _check_finite(parts: dict[str, float], state: TrainState, cfg: TrainConfig) -> None:
    if all(np.isfinite(v) for v in parts.values()) and _params_finite(state):
        return
    raise _divergence_error(parts, state, cfg)


def _maybe_decay(state: TrainState, cfg: TrainConfig) -> None:
    if not cfg.cosine_decay:
        return
    frac = min(1.0, state.step / max(1, cfg.max_steps))
    lr = cfg.effective_lr * 0.5 * (1.0 + float(np.cos(np.pi * frac)))
    for opt in (state.g_opt, state.d_opt):
        for group in opt.param_groups:
            group["lr"] = lr


def train_step_stage1(state: TrainState, batch: list[PairSample], cfg: TrainConfig) -> LossReport:
    """One alternating update: discriminator first, then encoder+decoder."""
    if state.model.training_stage != "stage1":
        raise ConfigurationError("train_step_stage1 requires a stage1 model")
    try:
        return _stage1_step(state, batch, cfg)
    except InvalidInputError as exc:
        raise _divergence_error({"cause": float("nan")}, state, cfg) from exc


def _stage1_step(state: TrainState, batch: list[PairSample], cfg: TrainConfig) -> LossReport:
    _maybe_decay(state, cfg)
    enc, dec, disc = state.model.encoder, state.model.decoder, state.model.discriminator
    photos = _photos_tensor(batch)
    edges = _edges_tensor([p.edge for p in batch])

    n = photos.shape[0]
    both = torch.cat([photos, edges])

    # discriminator on real photos+edges vs their reconstructions
    with torch.no_grad():
        c, s = enc(both)
        fakes = dec(c, s)
    reals = both
    if cfg.r1_gamma > 0:
        reals = both.detach().clone().requires_grad_(True)
    logits = disc(torch.cat([reals, fakes]))
    real_logits, fake_logits = logits[: 2 * n], logits[2 * n :]
    gan_d = L.loss_gan_discriminator(real_logits, fake_logits)
    if cfg.r1_gamma > 0:
        gan_d = gan_d + cfg.r1_gamma * L.r1_penalty(real_logits, reals)
    state.d_opt.zero_grad(set_to_none=True)
    gan_d.backward()
    state.d_opt.step()

    # encoder+decoder on reconstruction, content consistency, and realism
    c, s = enc(both)
    recons = dec(c, s)
    c_p, c_e = c[:n], c[n:]
    recon_p, recon_e = recons[:n], recons[n:]
    rec = L.loss_reconstruction(photos, edges, recon_p, recon_e)
    content = L.loss_content(c_p, c_e)
    fake_logits = disc(recons)
    gan_g = L.loss_gan_generator(fake_logits[:n]) + L.loss_gan_generator(fake_logits[n:])
    g_total = rec + cfg.weights.theta * content + cfg.weights.alpha * gan_g
    state.g_opt.zero_grad(set_to_none=True)
    g_total.backward()
    state.g_opt.step()

    report = LossReport(
        rec=rec.item(), content=content.item(), gan_g=gan_g.item(), gan_d=gan_d.item()
    )
    report.total = L.total_stage1(report, cfg.weights)
    _check_finite({"rec": report.rec, "content": report.content, "gan_g": report.gan_g,
                   "gan_d": report.gan_d}, state, cfg)
    state.step += 1
    state.metrics.append(report)
    return report


def train_step_stage2(state: TrainState, batch, cfg: TrainConfig) -> LossReport:
    """One triplet update: synthesize, re-encode, regularize, and adversarial."""
    if state.model.training_stage != "stage2":
        raise ConfigurationError("train_step_stage2 requires a model marked stage2")
    try:
        return _stage2_step(state, batch, cfg)
    except InvalidInputError as exc:
        raise _divergence_error({"cause": float("nan")}, state, cfg) from exc


def _stage2_step(state: TrainState, batch, cfg: TrainConfig) -> LossReport:
    _maybe_decay(state, cfg)
    enc, dec, disc = state.model.encoder, state.model.decoder, state.model.discriminator
    sketches = _edges_tensor([t.sketch_edge for t in batch])
    refs = torch.from_numpy(np.stack([t.reference.transpose(2, 0, 1) for t in batch]))

    n = refs.shape[0]

    # discriminator on reference photos vs synthesized outputs
    with torch.no_grad():
        c, s = enc(torch.cat([sketches, refs]))
        out = dec(c[:n], s[n:])
    reals = refs
    if cfg.r1_gamma > 0:
        reals = refs.detach().clone().requires_grad_(True)
    logits = disc(torch.cat([reals, out]))
    gan_d = L.loss_gan_discriminator(logits[:n], logits[n:])
    if cfg.r1_gamma > 0:
        gan_d = gan_d + cfg.r1_gamma * L.r1_penalty(logits[:n], reals)
    state.d_opt.zero_grad(set_to_none=True)
    gan_d.backward()
    state.d_opt.step()

    # encoder+decoder: synthesized output re-encoded and pulled toward its sources
    c, s = enc(torch.cat([sketches, refs]))
    c_k, s_r = c[:n], s[n:]
    out = dec(c_k, s_r)
    c_o, s_o = enc(out)
    reg_c, reg_s = L.loss_regularization(c_o, c_k.detach(), s_o, s_r.detach())
    gan_g = L.loss_gan_generator(disc(out))
    if cfg.ablation.disable_content_loss:
        reg_c = torch.zeros(())
    if cfg.ablation.disable_style_loss:
        reg_s = torch.zeros(())
    g_total = (reg_c + reg_s) + cfg.weights.beta * gan_g
    state.g_opt.zero_grad(set_to_none=True)
    g_total.backward()
    state.g_opt.step()

    report = LossReport(
        reg_content=reg_c.item(), reg_style=reg_s.item(), gan_g=gan_g.item(), gan_d=gan_d.item()
    )
    report.total = L.total_stage2(report, cfg.weights)
    _check_finite({"reg_content": report.reg_content, "reg_style": report.reg_style,
                   "gan_g": report.gan_g, "gan_d": report.gan_d}, state, cfg)
    state.step += 1
    state.metrics.append(report)
    return report


# --- checkpointing and the outer loop --------------------------------------


def save_train_checkpoint(state: TrainState, cfg: TrainConfig, path) -> None:
    extras = {
        "step": state.step,
        "g_opt": state.g_opt.state_dict(),
        "d_opt": state.d_opt.state_dict(),
        "torch_rng": torch.get_rng_state(),
        "metrics": [asdict(m) for m in state.metrics],
        "train_config": _config_dict(cfg),
    }
    save_checkpoint(state.model, path, extras=extras)


def load_train_checkpoint(path, cfg: TrainConfig) -> TrainState:
    model, extras = load_checkpoint(path, with_extras=True)
    state = init_state(cfg, model=model)
    state.g_opt.load_state_dict(extras["g_opt"])
    state.d_opt.load_state_dict(extras["d_opt"])
    torch.set_rng_state(extras["torch_rng"])
    state.step = extras["step"]
    state.metrics = [LossReport(**m) for m in extras["metrics"]]
    return state


def _config_dict(cfg: TrainConfig) -> dict:
    d = asdict(cfg)
    return d


def write_metrics(state: TrainState, cfg: TrainConfig, path) -> None:
    lines = [
        m.to_json_line(step=i + 1, stage=cfg.stage) for i, m in enumerate(state.metrics)
    ]
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    tmp = str(path) + ".tmp"
    Path(tmp).write_text("\n".join(lines) + ("\n" if lines else ""))
    os.replace(tmp, path)


def run_training(
    cfg: TrainConfig,
    pairs: list[PairSample],
    corpus: CorpusConfig,
    out_dir,
    resume=None,
    init_model: ModelBundle | None = None,
    arch=None,
) -> ModelBundle:
    """Run one training stage to ``cfg.max_steps``, checkpointing as it goes.

    ``resume`` continues an interrupted run from its checkpoint file. Stage 2
    must start from a stage-1 model (``init_model`` or a checkpoint path).
    The returned bundle is also written to ``out_dir/model_final.ckpt`` along
    with a ``metrics.jsonl`` log (one JSON object per step).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    if cfg.stage == "stage2" and cfg.ablation.skip_stage2:
        if init_model is None:
            raise ConfigurationError("skip_stage2 still needs the stage-1 model to pass through")
        model = clone_model(init_model)
        save_checkpoint(model, out_dir / "model_final.ckpt", extras={"step": 0, "skipped": True})
        write_metrics(TrainState(model, None, None), cfg, out_dir / "metrics.jsonl")
        return model

    if resume is not None:
        state = load_train_checkpoint(resume, cfg)
    else:
        torch.manual_seed(cfg.seed)
        if cfg.stage == "stage2":
            if init_model is None:
                raise ConfigurationError("stage2 training requires a stage-1 model or checkpoint")
            if isinstance(init_model, (str, Path)):
                init_model = load_checkpoint(init_model)
            model = clone_model(init_model)
            model.training_stage = "stage2"
            state = init_state(cfg, model=model)
        else:
            state = init_state(cfg, model=build_model(arch, seed=cfg.seed) if arch else None)

    state.model.train_mode()
    while state.step < cfg.max_steps:
        step = state.step
        if cfg.stage == "stage1":
            idx = pair_batch_indices(len(pairs), cfg.batch_size, cfg.seed, step)
            report = train_step_stage1(state, [pairs[i] for i in idx], cfg)
        else:
            batch = triplet_batch(pairs, corpus, cfg.batch_size, step)
            report = train_step_stage2(state, batch, cfg)
        if state.step % 100 == 0 or state.step == cfg.max_steps:
            logger.info("step %d/%d total=%.4f", state.step, cfg.max_steps, report.total)
        if cfg.checkpoint_every and state.step % cfg.checkpoint_every == 0:
            save_train_checkpoint(state, cfg, out_dir / f"model_step{state.step:06d}.ckpt")
            write_metrics(state, cfg, out_dir / "metrics.jsonl")

    state.model.assert_finite()
    save_train_checkpoint(state, cfg, out_dir / "model_final.ckpt")
    write_metrics(state, cfg, out_dir / "metrics.jsonl")
    state.model.eval_mode()
    return state.model


ABLATION_GRID = ("none", "content", "style", "stage2")


def ablation_config(cfg: TrainConfig, name: str) -> TrainConfig:
    """Stage-2 config variant for one ablation grid cell."""
    flags = {
        "none": AblationFlags(),
        "content": AblationFlags(disable_content_loss=True),
        "style": AblationFlags(disable_style_loss=True),
        "stage2": AblationFlags(skip_stage2=True),
    }[name]
    return replace(cfg, ablation=flags)


def run_ablation_grid(
    cfg: TrainConfig,
    pairs: list[PairSample],
    corpus: CorpusConfig,
    stage1_model: ModelBundle,
    out_root,
) -> dict[str, dict]:
    """Train the four stage-2 variants and log a proxy distribution distance.

    The distance compares synthesized outputs (each pair's edge map with an
    independently drawn reference) against the training photos. Results are
    recorded, not ranked: desk-scale runs are too small for a stable ordering.
    """
    from .evaluate import distribution_distance
    from .synthesis import synthesize_from_edge

    out_root = Path(out_root)
    summary: dict[str, dict] = {}
    for name in ABLATION_GRID:
        run_cfg = ablation_config(cfg, name)
        model = run_training(run_cfg, pairs, corpus, out_root / name, init_model=stage1_model)
        rng = np.random.default_rng(cfg.seed)
        outputs = []
        for pair in pairs:
            j = int(rng.integers(0, len(pairs)))
            outputs.append(synthesize_from_edge(pair.edge, pairs[j].photo, model))
        photos = [p.photo for p in pairs]
        distance = distribution_distance(outputs, photos)
        summary[name] = {"proxy_distribution_distance": float(distance), "steps": run_cfg.max_steps}
        (out_root / name / "ablation.json").write_text(json.dumps(summary[name], indent=2))
    (out_root / "summary.json").write_text(json.dumps(summary, indent=2))
    return summary
