"""Shared fixtures: the desk-scale corpus and the two trained models.

The full training runs take a while on CPU (roughly 40 min for the
auto-encoding stage and 15 min for fine-tuning). Set SKETCHSYNTH_TEST_CACHE
to a directory to reuse runs across invocations while iterating; the default
is a fresh training run per session.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import pytest

ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def record_criterion(name: str, passed: bool, details: str) -> None:
    ACCEPTANCE_RESULTS.append((name, passed, details))
    print(f"[{'PASS' if passed else 'FAIL'}] {name}: {details}")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, details in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {name}: {details}")


# --- trained desk-scale fixtures ---------------------------------------------

CORPUS_SIZE = 64
SCENE_PX = 72
CROP_PX = 64
STAGE1_STEPS = 2000
STAGE2_STEPS = 1000
BATCH_SIZE = 4
SEED = 0


def _workspace(tmp_path_factory) -> Path:
    cache = os.environ.get("SKETCHSYNTH_TEST_CACHE")
    if cache:
        path = Path(cache)
        path.mkdir(parents=True, exist_ok=True)
        return path
    return tmp_path_factory.mktemp("acceptance")


@pytest.fixture(scope="session")
def acceptance_workspace(tmp_path_factory) -> Path:
    return _workspace(tmp_path_factory)


@pytest.fixture(scope="session")
def acceptance_corpus(acceptance_workspace):
    from sketchsynth.data import CorpusConfig, build_pair_dataset, write_procedural_corpus
    from sketchsynth.standardize import EdgeOperatorConfig

    root = acceptance_workspace / "corpus"
    if not root.exists() or len(list(root.glob("*.png"))) != CORPUS_SIZE:
        write_procedural_corpus(root, CORPUS_SIZE, SCENE_PX, seed=1234)
    corpus_cfg = CorpusConfig(
        root=str(root), resize_to=SCENE_PX, crop_to=CROP_PX, seed=SEED, p_same=0.1
    )
    edge_cfg = EdgeOperatorConfig(target_size=CROP_PX)
    pairs = build_pair_dataset(corpus_cfg, edge_cfg)
    return corpus_cfg, edge_cfg, pairs


def _metrics(path: Path) -> list[dict]:
    return [json.loads(line) for line in (path / "metrics.jsonl").read_text().splitlines()]


@pytest.fixture(scope="session")
def stage1_run(acceptance_corpus, acceptance_workspace):
    """2000-step auto-encoding run on 64 scenes (the spec's smoke budget)."""
    from sketchsynth.models import desk_config, load_checkpoint
    from sketchsynth.trainer import TrainConfig, run_training

    corpus_cfg, edge_cfg, pairs = acceptance_corpus
    out_dir = acceptance_workspace / "stage1"
    cfg = TrainConfig(
        stage="stage1",
        batch_size=BATCH_SIZE,
        max_steps=STAGE1_STEPS,
        seed=SEED,
        checkpoint_every=500,
    )
    final = out_dir / "model_final.ckpt"
    if final.exists():
        model = load_checkpoint(final)
    else:
        model = run_training(cfg, pairs, corpus_cfg, out_dir, arch=desk_config(CROP_PX, 32))
    return model, _metrics(out_dir), out_dir, cfg


@pytest.fixture(scope="session")
def stage2_run(stage1_run, acceptance_corpus, acceptance_workspace):
    """1000 fine-tuning steps on sketch/reference triplets from the stage-1 model."""
    from sketchsynth.models import load_checkpoint
    from sketchsynth.trainer import TrainConfig, run_training

    corpus_cfg, edge_cfg, pairs = acceptance_corpus
    stage1_model = stage1_run[0]
    out_dir = acceptance_workspace / "stage2"
    cfg = TrainConfig(
        stage="stage2",
        batch_size=BATCH_SIZE,
        max_steps=STAGE2_STEPS,
        seed=SEED,
        checkpoint_every=500,
    )
    final = out_dir / "model_final.ckpt"
    if final.exists():
        model = load_checkpoint(final)
    else:
        model = run_training(cfg, pairs, corpus_cfg, out_dir, init_model=stage1_model)
    return model, _metrics(out_dir), out_dir, cfg
