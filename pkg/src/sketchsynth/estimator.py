"""Estimator-style facade over the full pipeline.

``SketchToPhoto`` wraps corpus preparation, both training stages, and
synthesis behind the familiar fit/predict surface, so the pipeline drops into
sklearn-style tooling (``get_params``/``set_params``/``clone`` all work). The
underlying modules remain the primary API for anything beyond that.
"""

from __future__ import annotations

import tempfile
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .data import CorpusConfig, PairSample, build_pair_dataset
from .losses import LossWeights
from .models import ArchConfig, ModelBundle
from .standardize import EdgeOperatorConfig, config_with_size, standardize_photo
from .synthesis import synthesize
from .trainer import TrainConfig, run_training
from .validation import check_image


class SketchToPhoto(BaseEstimator):
    """Fit on a photo corpus, then synthesize photos from (sketch, reference) pairs.

    ``fit`` accepts a directory of images or a sequence of H×W×3 arrays and
    runs the auto-encoding stage followed by triplet fine-tuning. ``predict``
    takes (sketch, reference) pairs and returns synthesized photos.
    """

    def __init__(
        self,
        image_size: int = 64,
        num_down_blocks: int = 2,
        base_channels: int = 32,
        content_channels: int = 64,
        style_dim: int = 128,
        stage1_steps: int = 2000,
        stage2_steps: int = 1000,
        batch_size: int = 8,
        lr_stage1: float | None = None,
        lr_stage2: float | None = None,
        theta: float = 0.5,
        alpha: float = 0.5,
        beta: float = 0.5,
        blur_sigma: float = 1.0,
        edge_threshold: float = 0.2,
        p_same: float = 0.1,
        seed: int = 0,
        work_dir: str | None = None,
    ):
        self.image_size = image_size
        self.num_down_blocks = num_down_blocks
        self.base_channels = base_channels
        self.content_channels = content_channels
        self.style_dim = style_dim
        self.stage1_steps = stage1_steps
        self.stage2_steps = stage2_steps
        self.batch_size = batch_size
        self.lr_stage1 = lr_stage1
        self.lr_stage2 = lr_stage2
        self.theta = theta
        self.alpha = alpha
        self.beta = beta
        self.blur_sigma = blur_sigma
        self.edge_threshold = edge_threshold
        self.p_same = p_same
        self.seed = seed
        self.work_dir = work_dir

    def _arch(self) -> ArchConfig:
        return ArchConfig(
            image_size=self.image_size,
            num_down_blocks=self.num_down_blocks,
            num_up_blocks=self.num_down_blocks,
            content_spatial=self.image_size // 2**self.num_down_blocks,
            content_channels=self.content_channels,
            style_dim=self.style_dim,
            base_channels=self.base_channels,
            max_channels=8 * self.base_channels,
        )

    def _edge_config(self) -> EdgeOperatorConfig:
        return EdgeOperatorConfig(
            blur_sigma=self.blur_sigma,
            threshold=self.edge_threshold,
            target_size=self.image_size,
        )

    def _pairs_from_arrays(self, X) -> list[PairSample]:
        from . import images

        edge_cfg = self._edge_config()
        pairs = []
        for i, item in enumerate(X):
            photo = check_image(images.to_rgb(np.asarray(item)), name=f"X[{i}]")
            photo = images.resize(photo, self.image_size, self.image_size)
            pairs.append(
                PairSample(
                    photo=photo,
                    edge=standardize_photo(photo, edge_cfg),
                    source_id=str(i),
                )
            )
        return pairs

    def fit(self, X, y=None):
        """Train both stages on a photo corpus (directory path or array list)."""
        corpus = CorpusConfig(
            root=str(X) if isinstance(X, (str, Path)) else ".",
            resize_to=self.image_size,
            crop_to=self.image_size,
            seed=self.seed,
            p_same=self.p_same,
        )
        if isinstance(X, (str, Path)):
            pairs = build_pair_dataset(corpus, self._edge_config())
        else:
            pairs = self._pairs_from_arrays(X)
        work = Path(self.work_dir) if self.work_dir else Path(tempfile.mkdtemp(prefix="sketchsynth_"))
        weights = LossWeights(theta=self.theta, alpha=self.alpha, beta=self.beta)
        stage1_cfg = TrainConfig(
            stage="stage1",
            lr=self.lr_stage1,
            batch_size=self.batch_size,
            max_steps=self.stage1_steps,
            weights=weights,
            seed=self.seed,
            checkpoint_every=0,
        )
        stage1 = run_training(stage1_cfg, pairs, corpus, work / "stage1", arch=self._arch())
        stage2_cfg = TrainConfig(
            stage="stage2",
            lr=self.lr_stage2,
            batch_size=self.batch_size,
            max_steps=self.stage2_steps,
            weights=weights,
            seed=self.seed,
            checkpoint_every=0,
        )
        self.model_ = run_training(stage2_cfg, pairs, corpus, work / "stage2", init_model=stage1)
        self.edge_config_ = self._edge_config()
        self.work_dir_ = str(work)
        return self

    def _require_fitted(self) -> ModelBundle:
        if not hasattr(self, "model_"):
            raise NotFittedError("call fit before predict")
        return self.model_

    def predict(self, X) -> list[np.ndarray]:
        """Synthesize a photo for every (sketch, reference) pair in ``X``."""
        model = self._require_fitted()
        cfg = config_with_size(self.edge_config_, model.arch.image_size)
        return [synthesize(sketch, reference, model, cfg) for sketch, reference in X]

    def transform(self, X) -> list[np.ndarray]:
        return self.predict(X)
