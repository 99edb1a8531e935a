"""Corpus ingestion and batch construction.

Stage 1 consumes photo/edge pairs; stage 2 consumes sketch/reference triplets
drawn from the same corpus. All randomness (crops, flips, triplet draws) is a
pure function of the corpus seed and the sample index, which is what makes
training runs reproducible and resumable.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from . import images, scenes
from .errors import ConfigurationError
from .standardize import EdgeOperatorConfig, config_with_size, standardize_photo

logger = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


@dataclass(frozen=True)
class CorpusConfig:
    """Where the photos live and how they are cropped into training samples."""

    root: str
    resize_to: int = 286
    crop_to: int = 256
    seed: int = 0
    augment_flip: bool = False
    p_same: float = 0.1
    manifest: str | None = None

    def __post_init__(self):
        if self.crop_to > self.resize_to:
            raise ConfigurationError(
                f"crop_to {self.crop_to} must not exceed resize_to {self.resize_to}"
            )
        if not (0.0 <= self.p_same <= 1.0):
            raise ConfigurationError(f"p_same must lie in [0, 1], got {self.p_same}")


@dataclass(frozen=True)
class PairSample:
    """A cropped photo with the edge map computed from that exact crop."""

    photo: np.ndarray
    edge: np.ndarray
    source_id: str


@dataclass(frozen=True)
class TripletSample:
    """A standardized sketch, an independently drawn style reference, and their ids."""

    sketch_edge: np.ndarray
    reference: np.ndarray
    ids: tuple[str, str]


def list_corpus_files(cfg: CorpusConfig) -> list[Path]:
    root = Path(cfg.root)
    if cfg.manifest:
        lines = Path(cfg.manifest).read_text().splitlines()
        return [root / line.strip() for line in lines if line.strip()]
    return sorted(p for p in root.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)


def _crop_rng(cfg: CorpusConfig, index: int) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, 0x5EED, index])


def prepare_photo(photo: np.ndarray, cfg: CorpusConfig, index: int) -> np.ndarray:
    """Resize, randomly crop, and optionally flip one photo, seeded by its index."""
    rng = _crop_rng(cfg, index)
    resized = images.resize(images.to_rgb(photo), cfg.resize_to, cfg.resize_to)
    margin = cfg.resize_to - cfg.crop_to
    y0 = int(rng.integers(0, margin + 1))
    x0 = int(rng.integers(0, margin + 1))
    crop = resized[y0 : y0 + cfg.crop_to, x0 : x0 + cfg.crop_to]
    if cfg.augment_flip and rng.integers(0, 2) == 1:
        crop = crop[:, ::-1]
    return np.ascontiguousarray(crop, dtype=np.float32)


def build_pair_dataset(cfg: CorpusConfig, edge_cfg: EdgeOperatorConfig) -> list[PairSample]:
    """Load the corpus into photo/edge pairs; edges come from the cropped photos.

    Undecodable files are skipped with a logged warning; an empty corpus is a
    configuration error.
    """
    files = list_corpus_files(cfg)
    edge_cfg = config_with_size(edge_cfg, cfg.crop_to)
    pairs: list[PairSample] = []
    for index, path in enumerate(files):
        try:
            photo = images.load_image(path)
        except Exception as exc:
            logger.warning("skipping undecodable file %s: %s", path, exc)
            continue
        crop = prepare_photo(photo, cfg, index)
        edge = standardize_photo(crop, edge_cfg)
        pairs.append(PairSample(photo=crop, edge=edge, source_id=path.name))
    if not pairs:
        raise ConfigurationError(f"no decodable images found under {cfg.root}")
    return pairs


def triplet_indices(n_pairs: int, cfg: CorpusConfig, draw: int) -> tuple[int, int]:
    """Deterministic (sketch, reference) index pair for one triplet draw.

    The reference is drawn uniformly and independently of the sketch, except
    that with probability ``p_same`` it is forced to the sketch's own photo.
    """
    if n_pairs < 2:
        raise ConfigurationError("triplet sampling needs at least 2 distinct photos")
    rng = np.random.default_rng([cfg.seed, 0x7217, draw])
    i = int(rng.integers(0, n_pairs))
    if rng.random() < cfg.p_same:
        return i, i
    return i, int(rng.integers(0, n_pairs))


def sample_triplets(pairs: list[PairSample], cfg: CorpusConfig) -> Iterator[TripletSample]:
    """Endless deterministic stream of sketch/reference triplets."""
    if len(pairs) < 2:
        raise ConfigurationError("triplet sampling needs at least 2 distinct photos")
    draw = 0
    while True:
        i, j = triplet_indices(len(pairs), cfg, draw)
        yield TripletSample(
            sketch_edge=pairs[i].edge,
            reference=pairs[j].photo,
            ids=(pairs[i].source_id, pairs[j].source_id),
        )
        draw += 1


def pair_batch_indices(n_pairs: int, batch_size: int, seed: int, step: int) -> np.ndarray:
    """Indices of the stage-1 batch at a given step.

    Batches walk epoch-wise permutations of the corpus (reshuffled each
    epoch), so coverage stays balanced; everything is a pure function of
    (seed, step), which keeps interrupted runs resumable.
    """
    positions = np.arange(step * batch_size, (step + 1) * batch_size)
    out = np.empty(batch_size, dtype=np.int64)
    for k, pos in enumerate(positions):
        epoch, offset = divmod(int(pos), n_pairs)
        perm = np.random.default_rng([seed, 0xBA7C, epoch]).permutation(n_pairs)
        out[k] = perm[offset]
    return out


def triplet_batch(pairs: list[PairSample], cfg: CorpusConfig, batch_size: int, step: int) -> list[TripletSample]:
    """The stage-2 batch at a given step; draw k of step t is global draw t*B+k."""
    out = []
    for k in range(batch_size):
        i, j = triplet_indices(len(pairs), cfg, step * batch_size + k)
        out.append(
            TripletSample(
                sketch_edge=pairs[i].edge,
                reference=pairs[j].photo,
                ids=(pairs[i].source_id, pairs[j].source_id),
            )
        )
    return out


def generate_procedural_scene(seed: int, size: int, palette: str | None = None) -> np.ndarray:
    """Alias for :func:`sketchsynth.scenes.generate_procedural_scene`."""
    return scenes.generate_procedural_scene(seed, size, palette)


def write_procedural_corpus(
    out_dir: str | Path, count: int, size: int, seed: int = 0, palette: str | None = None
) -> list[Path]:
    """Render ``count`` procedural scenes to PNG files under ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for k in range(count):
        img = scenes.generate_procedural_scene(seed + k, size, palette)
        path = out_dir / f"scene_{seed + k:05d}.png"
        images.save_image(img, path)
        paths.append(path)
    return paths
