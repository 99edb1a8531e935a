import json

import numpy as np
import pytest
import torch

from sketchsynth.data import CorpusConfig, PairSample, build_pair_dataset, write_procedural_corpus
from sketchsynth.errors import ConfigurationError, TrainingDivergedError
from sketchsynth.losses import LossReport, LossWeights
from sketchsynth.models import ArchConfig, build_model, load_checkpoint
from sketchsynth.standardize import EdgeOperatorConfig
from sketchsynth.trainer import (
    ABLATION_GRID,
    AblationFlags,
    TrainConfig,
    ablation_config,
    init_state,
    run_training,
    train_step_stage1,
    train_step_stage2,
)


def small_arch() -> ArchConfig:
    return ArchConfig(
        image_size=32,
        num_down_blocks=2,
        num_up_blocks=2,
        content_spatial=8,
        content_channels=8,
        style_dim=16,
        base_channels=8,
        max_channels=32,
        disc_base_channels=8,
    )


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("trainer_corpus")
    write_procedural_corpus(root, 6, 36, seed=40)
    cfg = CorpusConfig(root=str(root), resize_to=36, crop_to=32, seed=0)
    pairs = build_pair_dataset(cfg, EdgeOperatorConfig(target_size=32))
    return cfg, pairs


def small_cfg(**kw) -> TrainConfig:
    base = dict(stage="stage1", batch_size=2, max_steps=4, seed=0, checkpoint_every=2)
    base.update(kw)
    return TrainConfig(**base)


def test_fresh_runs_are_bit_identical(corpus, tmp_path):
    cfg_corpus, pairs = corpus
    cfg = small_cfg()
    run_training(cfg, pairs, cfg_corpus, tmp_path / "a", arch=small_arch())
    run_training(cfg, pairs, cfg_corpus, tmp_path / "b", arch=small_arch())
    a = (tmp_path / "a" / "metrics.jsonl").read_text()
    b = (tmp_path / "b" / "metrics.jsonl").read_text()
    assert a == b and a.strip()


def test_resume_reproduces_uninterrupted_run(corpus, tmp_path):
    cfg_corpus, pairs = corpus
    cfg = small_cfg(max_steps=6)
    run_training(cfg, pairs, cfg_corpus, tmp_path / "full", arch=small_arch())
    # a killed run: only the first 2 steps (one checkpoint interval)
    short = small_cfg(max_steps=2, checkpoint_every=2)
    run_training(short, pairs, cfg_corpus, tmp_path / "killed", arch=small_arch())
    resumed = run_training(
        cfg, pairs, cfg_corpus, tmp_path / "resumed",
        resume=tmp_path / "killed" / "model_step000002.ckpt",
    )
    full = (tmp_path / "full" / "metrics.jsonl").read_text()
    res = (tmp_path / "resumed" / "metrics.jsonl").read_text()
    assert full == res
    assert resumed.training_stage == "stage1"


def test_report_total_is_exact_weighted_sum(corpus):
    cfg_corpus, pairs = corpus
    cfg = small_cfg(max_steps=1)
    state = init_state(cfg, model=build_model(small_arch(), seed=0))
    report = train_step_stage1(state, pairs[:2], cfg)
    assert report.total == report.rec + 0.5 * report.content + 0.5 * report.gan_g


def test_zero_weights_reduce_to_reconstruction(corpus):
    cfg_corpus, pairs = corpus
    cfg = small_cfg(max_steps=1, weights=LossWeights(theta=0.0, alpha=0.0))
    state = init_state(cfg, model=build_model(small_arch(), seed=0))
    report = train_step_stage1(state, pairs[:2], cfg)
    assert report.total == report.rec


def test_max_steps_zero_returns_initial_model(corpus, tmp_path):
    cfg_corpus, pairs = corpus
    cfg = small_cfg(max_steps=0, checkpoint_every=0)
    model = run_training(cfg, pairs, cfg_corpus, tmp_path / "zero", arch=small_arch())
    fresh = build_model(small_arch(), seed=cfg.seed)
    for a, b in zip(model.parameters(), fresh.parameters()):
        assert torch.equal(a, b)
    assert (tmp_path / "zero" / "model_final.ckpt").exists()
    assert (tmp_path / "zero" / "metrics.jsonl").read_text() == ""


def test_metrics_are_json_lines(corpus, tmp_path):
    cfg_corpus, pairs = corpus
    run_training(small_cfg(max_steps=3), pairs, cfg_corpus, tmp_path / "m", arch=small_arch())
    lines = (tmp_path / "m" / "metrics.jsonl").read_text().splitlines()
    assert len(lines) == 3
    for i, line in enumerate(lines):
        record = json.loads(line)
        assert record["step"] == i + 1
        assert record["stage"] == "stage1"
        assert record["total"] == pytest.approx(
            record["rec"] + 0.5 * record["content"] + 0.5 * record["gan_g"]
        )


def test_nan_aborts_with_diagnostics(corpus):
    cfg_corpus, pairs = corpus
    cfg = small_cfg(max_steps=1)
    state = init_state(cfg, model=build_model(small_arch(), seed=0))
    with torch.no_grad():
        next(state.model.decoder.parameters()).fill_(float("nan"))
    with pytest.raises(TrainingDivergedError) as err:
        train_step_stage1(state, pairs[:2], cfg)
    diag = err.value.diagnostics
    assert diag["step"] == 1
    assert "losses" in diag and "parameter_norms" in diag
    assert any(not np.isfinite(v) for v in diag["losses"].values()) or any(
        not np.isfinite(v) for v in diag["parameter_norms"].values()
    )


# --- stage 2 ----------------------------------------------------------------------


def make_stage2_state(corpus, **cfg_kw):
    cfg_corpus, pairs = corpus
    stage1 = build_model(small_arch(), seed=1)
    stage1.training_stage = "stage2"
    cfg = TrainConfig(stage="stage2", batch_size=2, max_steps=4, seed=0, **cfg_kw)
    return cfg, init_state(cfg, model=stage1), pairs, cfg_corpus


def test_stage2_requires_initial_model():
    cfg = TrainConfig(stage="stage2", max_steps=1)
    with pytest.raises(ConfigurationError):
        init_state(cfg)


def test_stage2_report_total(corpus):
    from sketchsynth.data import triplet_batch

    cfg, state, pairs, cfg_corpus = make_stage2_state(corpus)
    batch = triplet_batch(pairs, cfg_corpus, 2, step=0)
    report = train_step_stage2(state, batch, cfg)
    assert report.total == (report.reg_content + report.reg_style) + 0.5 * report.gan_g


def test_stage2_ablation_flags_zero_terms(corpus):
    from sketchsynth.data import triplet_batch

    cfg, state, pairs, cfg_corpus = make_stage2_state(
        corpus, ablation=AblationFlags(disable_content_loss=True, disable_style_loss=True)
    )
    batch = triplet_batch(pairs, cfg_corpus, 2, step=0)
    report = train_step_stage2(state, batch, cfg)
    assert report.reg_content == 0.0 and report.reg_style == 0.0
    assert report.total == 0.5 * report.gan_g


def test_ablation_only_removes_terms():
    """total(with flag) <= total(without flag) on identical loss parts."""
    from sketchsynth.losses import total_stage2

    parts = LossReport(reg_content=0.7, reg_style=0.4, gan_g=1.1)
    w = LossWeights()
    full = total_stage2(parts, w)
    no_content = total_stage2(LossReport(reg_content=0.0, reg_style=0.4, gan_g=1.1), w)
    no_style = total_stage2(LossReport(reg_content=0.7, reg_style=0.0, gan_g=1.1), w)
    assert no_content <= full and no_style <= full


def test_skip_stage2_is_passthrough(corpus, tmp_path):
    cfg_corpus, pairs = corpus
    stage1 = build_model(small_arch(), seed=2)
    cfg = TrainConfig(
        stage="stage2", max_steps=4, seed=0, ablation=AblationFlags(skip_stage2=True)
    )
    out = run_training(cfg, pairs, cfg_corpus, tmp_path / "skip", init_model=stage1)
    for a, b in zip(out.parameters(), stage1.parameters()):
        assert torch.equal(a, b)
    assert (tmp_path / "skip" / "metrics.jsonl").read_text() == ""
    assert (tmp_path / "skip" / "model_final.ckpt").exists()


def test_stage2_from_checkpoint_path(corpus, tmp_path):
    cfg_corpus, pairs = corpus
    run_training(small_cfg(max_steps=1, checkpoint_every=0), pairs, cfg_corpus, tmp_path / "s1", arch=small_arch())
    cfg2 = TrainConfig(stage="stage2", batch_size=2, max_steps=1, seed=0, checkpoint_every=0)
    model = run_training(
        cfg2, pairs, cfg_corpus, tmp_path / "s2", init_model=tmp_path / "s1" / "model_final.ckpt"
    )
    assert model.training_stage == "stage2"
    reloaded = load_checkpoint(tmp_path / "s2" / "model_final.ckpt")
    assert reloaded.training_stage == "stage2"


def test_stage_mismatch_rejected(corpus):
    cfg_corpus, pairs = corpus
    cfg = small_cfg(max_steps=1)
    state = init_state(cfg, model=build_model(small_arch(), seed=0))
    with pytest.raises(ConfigurationError):
        train_step_stage2(state, [], cfg)


def test_ablation_config_grid():
    cfg = TrainConfig(stage="stage2", max_steps=1)
    assert ablation_config(cfg, "none").ablation == AblationFlags()
    assert ablation_config(cfg, "content").ablation.disable_content_loss
    assert ablation_config(cfg, "style").ablation.disable_style_loss
    assert ablation_config(cfg, "stage2").ablation.skip_stage2
    assert set(ABLATION_GRID) == {"none", "content", "style", "stage2"}


def test_config_validation():
    with pytest.raises(ConfigurationError):
        TrainConfig(stage="stage3")
    with pytest.raises(ConfigurationError):
        TrainConfig(lr=-1.0)
    with pytest.raises(ConfigurationError):
        TrainConfig(adam_beta2=1.0)
    assert TrainConfig(stage="stage1").effective_lr == 2e-3
    assert TrainConfig(stage="stage2").effective_lr == 4e-4


def test_pure_autoencoder_reconstruction_decreases(tmp_path):
    """theta=alpha=0 on a 2-image corpus: rec loss falls in >=90% of 20-step windows."""
    root = tmp_path / "two"
    write_procedural_corpus(root, 2, 36, seed=9)
    corpus = CorpusConfig(root=str(root), resize_to=36, crop_to=32, seed=0)
    pairs = build_pair_dataset(corpus, EdgeOperatorConfig(target_size=32))
    cfg = TrainConfig(
        stage="stage1",
        batch_size=2,
        max_steps=200,
        seed=0,
        checkpoint_every=0,
        weights=LossWeights(theta=0.0, alpha=0.0),
    )
    run_training(cfg, pairs, corpus, tmp_path / "run", arch=small_arch())
    rec = [
        json.loads(line)["rec"]
        for line in (tmp_path / "run" / "metrics.jsonl").read_text().splitlines()
    ]
    windows = [np.mean(rec[i : i + 20]) for i in range(0, 200, 20)]
    drops = sum(1 for a, b in zip(windows, windows[1:]) if b < a)
    assert drops >= 0.9 * (len(windows) - 1)
