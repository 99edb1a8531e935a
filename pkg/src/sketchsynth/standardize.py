"""Conversion of photos and freehand sketches into standardized edge maps.

Photos and sketches live in very different pixel distributions; training and
inference only line up once both are reduced to the same thin-stroke edge
representation. Photos go through a classical detector (Gaussian blur,
gradient magnitude, non-maximum thinning, threshold); sketches are binarized
and skeletonized so stroke width no longer matters. An ``external`` operator
hook shells out to any user-supplied detector with a PNG-in/PNG-out contract.
"""

from __future__ import annotations

import shlex
import subprocess
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy import ndimage
from skimage.morphology import binary_dilation, disk, skeletonize
from sklearn.base import BaseEstimator, TransformerMixin

from . import images
from .errors import BlankSketchWarning, ConfigurationError, InvalidInputError
from .validation import check_edge_map, check_image, check_positive, check_unit_interval

OPERATORS = ("gradient-magnitude", "difference-of-gaussians", "external")

# Difference-of-Gaussians uses the conventional 1.6 sigma ratio.
DOG_SIGMA_RATIO = 1.6


@dataclass(frozen=True)
class EdgeOperatorConfig:
    """Settings for the photo/sketch edge standardization pipeline.

    ``target_size`` should match the training crop size. Kernel support is
    truncated at two sigma, which keeps the response of an ideal step inside
    a ±3·sigma band.
    """

    operator: str = "gradient-magnitude"
    blur_sigma: float = 1.0
    threshold: float = 0.2
    invert_input: bool = False
    target_size: int = 64
    binarize: bool = False
    stroke_width: int = 1
    external_command: str | None = None

    def __post_init__(self):
        if self.operator not in OPERATORS:
            raise ConfigurationError(f"unknown operator {self.operator!r}, expected one of {OPERATORS}")
        check_positive(self.blur_sigma, name="blur_sigma")
        check_unit_interval(self.threshold, name="threshold", open_ends=True)
        if self.target_size < 8:
            raise ConfigurationError(f"target_size must be at least 8, got {self.target_size}")
        if self.stroke_width < 1:
            raise ConfigurationError(f"stroke_width must be at least 1, got {self.stroke_width}")
        if self.operator == "external" and not self.external_command:
            raise ConfigurationError("external operator requires external_command")


def blur_radius(sigma: float) -> int:
    return max(1, int(2.0 * sigma + 0.5))


def gaussian_blur(image: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur with replicate borders, truncated at 2 sigma."""
    return ndimage.gaussian_filter(
        image.astype(np.float64), sigma=sigma, mode="nearest", radius=blur_radius(sigma)
    )


def nonmax_suppress(magnitude: np.ndarray, gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Zero pixels that are not local maxima along the gradient direction.

    Directions are quantized to the four axes; border pixels compare against
    in-bounds neighbors only.
    """
    h, w = magnitude.shape
    angle = np.mod(np.degrees(np.arctan2(gy, gx)), 180.0)
    # neighbor offsets (dy, dx) per quantized direction
    offsets = np.zeros((h, w, 2), dtype=np.int64)
    horiz = (angle <= 22.5) | (angle > 157.5)
    diag1 = (angle > 22.5) & (angle <= 67.5)
    vert = (angle > 67.5) & (angle <= 112.5)
    diag2 = (angle > 112.5) & (angle <= 157.5)
    offsets[horiz] = (0, 1)
    offsets[diag1] = (1, 1)
    offsets[vert] = (1, 0)
    offsets[diag2] = (1, -1)

    ys, xs = np.mgrid[0:h, 0:w]
    keep = np.ones_like(magnitude, dtype=bool)
    for sign in (1, -1):
        ny = np.clip(ys + sign * offsets[:, :, 0], 0, h - 1)
        nx = np.clip(xs + sign * offsets[:, :, 1], 0, w - 1)
        neighbor = magnitude[ny, nx]
        same = (ny == ys) & (nx == xs)
        keep &= (magnitude >= neighbor) | same
    return np.where(keep, magnitude, 0.0)


def edge_magnitude(lum: np.ndarray, sigma: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Unnormalized gradient-of-Gaussian magnitude and its components.

    Central differences inside, one-sided at the borders.
    """
    blurred = gaussian_blur(lum, sigma)
    gy, gx = np.gradient(blurred)
    return np.sqrt(gx * gx + gy * gy), gx, gy


def _edge_response(lum: np.ndarray, cfg: EdgeOperatorConfig) -> np.ndarray:
    """Raw edge response in [0, 1] for a luminance image at target size."""
    if cfg.operator == "gradient-magnitude":
        magnitude, gx, gy = edge_magnitude(lum, cfg.blur_sigma)
        magnitude = nonmax_suppress(magnitude, gx, gy)
    elif cfg.operator == "difference-of-gaussians":
        magnitude = np.abs(
            gaussian_blur(lum, cfg.blur_sigma) - gaussian_blur(lum, cfg.blur_sigma * DOG_SIGMA_RATIO)
        )
    else:
        return _run_external(lum, cfg)
    peak = magnitude.max()
    if peak > 1e-12:
        magnitude = magnitude / peak
    else:
        magnitude = np.zeros_like(magnitude)
    return magnitude


def _run_external(lum: np.ndarray, cfg: EdgeOperatorConfig) -> np.ndarray:
    cmd = shlex.split(cfg.external_command)
    try:
        proc = subprocess.run(cmd, input=images.encode_png_bytes(lum), capture_output=True, check=True)
    except (OSError, subprocess.CalledProcessError) as exc:
        raise ConfigurationError(f"external edge operator failed: {exc}") from exc
    arr = images.decode_png_bytes(proc.stdout)
    arr = images.to_luminance(arr)
    return images.resize(arr, lum.shape[0], lum.shape[1]).astype(np.float64)


def standardize_photo(photo: np.ndarray, cfg: EdgeOperatorConfig) -> np.ndarray:
    """Convert a photo into its standardized edge map.

    Deterministic for a fixed config; output is ``target_size`` square with
    values in [0, 1] (``{0, 1}`` when ``cfg.binarize`` is set).
    """
    photo = check_image(photo, name="photo")
    lum = images.to_luminance(photo)
    lum = images.resize(lum, cfg.target_size, cfg.target_size).astype(np.float64)
    # Work on the 8-bit luminance grid: output is then invariant to a PNG
    # round trip and to sub-quantization color perturbations.
    lum = np.round(lum * 255.0) / 255.0
    response = _edge_response(lum, cfg)
    edge = np.where(response > cfg.threshold, response, 0.0)
    if cfg.binarize:
        edge = (edge > 0).astype(np.float64)
    return edge.astype(np.float32)


def standardize_sketch(sketch: np.ndarray, cfg: EdgeOperatorConfig) -> np.ndarray:
    """Convert a freehand sketch into the same thin-stroke edge representation.

    Strokes are binarized, thinned to a one-pixel skeleton, and re-dilated to
    ``cfg.stroke_width`` so different drawing styles land on similar maps. A
    sketch with no stroke pixels yields an all-zero map and a
    :class:`BlankSketchWarning` rather than an error (the editing UI can
    transiently produce empty canvases).
    """
    sketch = check_image(sketch, name="sketch")
    lum = images.to_luminance(sketch)
    ink = lum if cfg.invert_input else 1.0 - lum
    ink = images.resize(ink, cfg.target_size, cfg.target_size).astype(np.float64)
    ink = np.round(ink * 255.0) / 255.0
    mask = ink > cfg.threshold
    if not mask.any():
        warnings.warn("sketch has no stroke pixels after thresholding", BlankSketchWarning)
        return np.zeros((cfg.target_size, cfg.target_size), dtype=np.float32)
    skeleton = skeletonize(mask)
    if cfg.stroke_width > 1:
        skeleton = binary_dilation(skeleton, disk(cfg.stroke_width // 2))
    return skeleton.astype(np.float32)


def binarize(edge: np.ndarray, threshold: float) -> np.ndarray:
    """Map an edge map to {0, 1}: pixels strictly above the threshold become 1.

    Monotone in the threshold: raising it never adds stroke pixels.
    """
    edge = check_edge_map(edge)
    check_unit_interval(threshold, name="threshold", open_ends=True)
    return (edge > threshold).astype(np.float32)


class EdgeStandardizer(TransformerMixin, BaseEstimator):
    """Stateless transformer turning photos or sketches into edge maps.

    Parameters mirror :class:`EdgeOperatorConfig`; ``mode`` picks the photo or
    sketch pipeline. ``fit`` is a no-op so the class drops into sklearn
    pipelines.
    """

    def __init__(
        self,
        mode: str = "photo",
        operator: str = "gradient-magnitude",
        blur_sigma: float = 1.0,
        threshold: float = 0.2,
        invert_input: bool = False,
        target_size: int = 64,
        binarize: bool = False,
        stroke_width: int = 1,
        external_command: str | None = None,
    ):
        self.mode = mode
        self.operator = operator
        self.blur_sigma = blur_sigma
        self.threshold = threshold
        self.invert_input = invert_input
        self.target_size = target_size
        self.binarize = binarize
        self.stroke_width = stroke_width
        self.external_command = external_command

    def _config(self) -> EdgeOperatorConfig:
        return EdgeOperatorConfig(
            operator=self.operator,
            blur_sigma=self.blur_sigma,
            threshold=self.threshold,
            invert_input=self.invert_input,
            target_size=self.target_size,
            binarize=self.binarize,
            stroke_width=self.stroke_width,
            external_command=self.external_command,
        )

    def fit(self, X=None, y=None):
        if self.mode not in ("photo", "sketch"):
            raise ConfigurationError(f"mode must be 'photo' or 'sketch', got {self.mode!r}")
        return self

    def transform(self, X) -> list[np.ndarray]:
        """Standardize one image or a sequence of images; returns a list."""
        self.fit()
        cfg = self._config()
        fn = standardize_photo if self.mode == "photo" else standardize_sketch
        if isinstance(X, np.ndarray) and X.ndim in (2, 3) and (X.ndim == 2 or X.shape[2] in (1, 3)):
            return [fn(X, cfg)]
        return [fn(np.asarray(item), cfg) for item in X]


def config_with_size(cfg: EdgeOperatorConfig, size: int) -> EdgeOperatorConfig:
    """Copy of ``cfg`` retargeted to another output size."""
    return replace(cfg, target_size=size)
