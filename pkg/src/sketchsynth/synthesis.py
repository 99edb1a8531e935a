"""Inference-time composition: sketch-to-photo synthesis, style blending, and
stroke-based photo editing.

Synthesis standardizes the sketch, takes its content grid, takes the style
vector of a reference photo, and decodes the pair. Blending forms a convex
combination of several reference styles. Editing operates directly on the
standardized edge map: strokes are rasterized onto it (add) or cleared from
it (erase), and the edited map is re-synthesized.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import torch

from . import images
from .errors import BlankSketchWarning, ContractError, EditClippedWarning
from .models import ModelBundle, image_to_tensor, tensor_to_image
from .standardize import EdgeOperatorConfig, config_with_size, standardize_photo, standardize_sketch
from .validation import check_edge_map, check_image

WEIGHT_SUM_TOLERANCE = 1e-6


@dataclass(frozen=True)
class StyleBlend:
    """Convex combination of style vectors: list of (style, weight) entries."""

    entries: list[tuple[np.ndarray, float]]

    def __post_init__(self):
        if not self.entries:
            raise ContractError("style blend needs at least one entry")
        weights = [w for _, w in self.entries]
        if any(w < 0 for w in weights):
            raise ContractError(f"blend weights must be nonnegative, got {weights}")
        if abs(sum(weights) - 1.0) > WEIGHT_SUM_TOLERANCE:
            raise ContractError(f"blend weights must sum to 1, got sum {sum(weights)!r}")


def blend_styles(blend: StyleBlend) -> np.ndarray:
    """Elementwise convex combination; zero-weight entries are skipped so the
    endpoints reproduce the corresponding single style bit-for-bit."""
    live = [(s, w) for s, w in blend.entries if w != 0.0]
    first, w0 = live[0]
    out = np.asarray(first, dtype=np.float32) * np.float32(w0)
    for style, w in live[1:]:
        out = out + np.asarray(style, dtype=np.float32) * np.float32(w)
    return out


def two_reference_blend(style_a: np.ndarray, style_b: np.ndarray, gamma: float) -> StyleBlend:
    """The documented two-reference case: gamma on the first style."""
    return StyleBlend([(style_a, float(gamma)), (style_b, 1.0 - float(gamma))])


def _encode_tensor(model: ModelBundle, x: torch.Tensor):
    model.encoder.eval()
    with torch.no_grad():
        return model.encoder(x)


def _decode_tensor(model: ModelBundle, content: torch.Tensor, style: torch.Tensor) -> np.ndarray:
    model.decoder.eval()
    with torch.no_grad():
        out = model.decoder(content, style)
    return tensor_to_image(out)


def _prepare_reference(reference: np.ndarray, model: ModelBundle) -> torch.Tensor:
    ref = check_image(images.to_rgb(reference), name="reference")
    size = model.arch.image_size
    ref = images.resize(ref, size, size)
    return image_to_tensor(ref)


def encode_style(reference: np.ndarray, model: ModelBundle) -> np.ndarray:
    """Style vector of a reference photo (resized to the model's input size)."""
    _, style = _encode_tensor(model, _prepare_reference(reference, model))
    return style[0].numpy().astype(np.float32)


def _sketch_content(sketch: np.ndarray, model: ModelBundle, edge_cfg: EdgeOperatorConfig):
    cfg = config_with_size(edge_cfg, model.arch.image_size)
    edge = standardize_sketch(sketch, cfg)
    content, _ = _encode_tensor(model, image_to_tensor(edge))
    return edge, content


def _warn_if_unfinetuned(model: ModelBundle) -> None:
    if model.training_stage != "stage2":
        warnings.warn(
            "model has not been fine-tuned on sketch/reference triplets; "
            "synthesis quality may be poor",
            UserWarning,
        )


def synthesize(
    sketch: np.ndarray,
    reference: np.ndarray,
    model: ModelBundle,
    edge_cfg: EdgeOperatorConfig,
) -> np.ndarray:
    """Photo from (sketch content, reference style); deterministic."""
    _warn_if_unfinetuned(model)
    _, content = _sketch_content(sketch, model, edge_cfg)
    style = encode_style(reference, model)
    return _decode_tensor(model, content, torch.from_numpy(style.copy()).unsqueeze(0))


def synthesize_from_edge(edge: np.ndarray, reference: np.ndarray, model: ModelBundle) -> np.ndarray:
    """Like :func:`synthesize` but for an already standardized edge map."""
    edge = check_edge_map(edge)
    if not (edge > 0).any():
        warnings.warn("synthesizing from a blank edge map", BlankSketchWarning)
    size = model.arch.image_size
    edge = images.resize(edge, size, size)
    content, _ = _encode_tensor(model, image_to_tensor(edge))
    style = encode_style(reference, model)
    return _decode_tensor(model, content, torch.from_numpy(style.copy()).unsqueeze(0))


def synthesize_blended(
    sketch: np.ndarray,
    blend: StyleBlend,
    model: ModelBundle,
    edge_cfg: EdgeOperatorConfig,
) -> np.ndarray:
    """Photo from sketch content and a convex combination of reference styles."""
    _warn_if_unfinetuned(model)
    _, content = _sketch_content(sketch, model, edge_cfg)
    style = blend_styles(blend)
    return _decode_tensor(model, content, torch.from_numpy(style.copy()).unsqueeze(0))


# --- stroke edits -----------------------------------------------------------


@dataclass(frozen=True)
class StrokeEdit:
    """One edit: add a polyline of a given width, or erase under a mask/polyline."""

    op: str  # "add" | "erase"
    points: list[tuple[float, float]] | None = None  # (x, y) pixel coordinates
    width: float = 1.0
    mask: np.ndarray | None = None

    def __post_init__(self):
        if self.op not in ("add", "erase"):
            raise ContractError(f"stroke op must be 'add' or 'erase', got {self.op!r}")
        if self.points is None and self.mask is None:
            raise ContractError("stroke edit needs points or a mask")
        if self.width <= 0:
            raise ContractError(f"stroke width must be > 0, got {self.width}")


def rasterize_polyline(shape: tuple[int, int], points, width: float = 1.0) -> np.ndarray:
    """Boolean mask of a polyline stamped with a round brush of ``width`` pixels.

    Points reaching outside the canvas are clipped (with a warning); a
    single-point polyline stamps one dot.
    """
    h, w = shape
    mask = np.zeros((h, w), dtype=bool)
    pts = [(float(x), float(y)) for x, y in points]
    if not pts:
        return mask
    radius = max(0.0, (float(width) - 1.0) / 2.0)
    r_int = int(math.ceil(radius))
    ys, xs = np.mgrid[-r_int : r_int + 1, -r_int : r_int + 1]
    brush = (xs * xs + ys * ys) <= max(radius * radius, 0.25)
    brush_dy, brush_dx = np.nonzero(brush)
    brush_dy = brush_dy - r_int
    brush_dx = brush_dx - r_int

    clipped = False
    stamps_x: list[np.ndarray] = []
    stamps_y: list[np.ndarray] = []

    def stamp(x: float, y: float):
        nonlocal clipped
        cx, cy = int(round(x)), int(round(y))
        px = brush_dx + cx
        py = brush_dy + cy
        keep = (px >= 0) & (px < w) & (py >= 0) & (py < h)
        if not keep.all():
            clipped = True
        stamps_x.append(px[keep])
        stamps_y.append(py[keep])

    prev = pts[0]
    stamp(*prev)
    for cur in pts[1:]:
        dist = math.hypot(cur[0] - prev[0], cur[1] - prev[1])
        steps = max(1, int(math.ceil(dist / 0.5)))
        for k in range(1, steps + 1):
            t = k / steps
            stamp(prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1]))
        prev = cur
    if stamps_x:
        mask[np.concatenate(stamps_y), np.concatenate(stamps_x)] = True
    if clipped:
        warnings.warn("stroke reaches outside the canvas; clipped", EditClippedWarning)
    return mask


def apply_stroke_edits(edge: np.ndarray, edits: list[StrokeEdit]) -> np.ndarray:
    """Apply edits in order to a standardized edge map; pure, composable.

    Applying ``[e1, e2]`` equals applying ``e1`` then ``e2``.
    """
    out = np.array(edge, dtype=np.float32, copy=True)
    for edit in edits:
        if edit.mask is not None:
            mask = _fit_mask(edit.mask, out.shape)
        else:
            mask = rasterize_polyline(out.shape, edit.points, edit.width)
        out[mask] = 1.0 if edit.op == "add" else 0.0
    return out


def _fit_mask(mask: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    arr = np.asarray(mask)
    if arr.shape != shape:
        arr = images.resize(arr.astype(np.float32), shape[0], shape[1]) > 0.5
    return arr.astype(bool)


def edit_photo(
    photo: np.ndarray,
    stroke_ops: list[StrokeEdit],
    reference: np.ndarray | None,
    model: ModelBundle,
    edge_cfg: EdgeOperatorConfig,
) -> tuple[np.ndarray, np.ndarray]:
    """Standardize a photo, apply stroke edits, and re-synthesize.

    Without an explicit reference the photo styles itself, so an empty edit
    list approximates the encode/decode round trip. Returns
    (edited edge map, synthesized photo).
    """
    photo = check_image(images.to_rgb(photo), name="photo")
    cfg = config_with_size(edge_cfg, model.arch.image_size)
    edge = standardize_photo(photo, cfg)
    edited = apply_stroke_edits(edge, stroke_ops)
    ref = photo if reference is None else reference
    return edited, synthesize_from_edge(edited, ref, model)
