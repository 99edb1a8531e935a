"""Procedural scene generator: colored primitives on a gradient background.

Serves as a self-contained stand-in for a photo corpus. Geometry (layout of
rectangles, triangles, circles) is driven purely by the seed; appearance is
driven by the palette. Palettes are iso-luminant per role — every palette
assigns the same 299R+587G+114B integer luma to each role — so the luminance
structure, and therefore the standardized edge map, is identical across
palettes for the same geometry seed.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError, InvalidInputError

# Per-role uint8 colors; roles share their exact integer luma across palettes.
_PALETTE_TABLE: dict[str, dict[str, tuple[int, int, int]]] = {
    "warm": {
        "bg_top": (250, 239, 15),
        "bg_bottom": (242, 111, 24),
        "shape0": (116, 2, 21),
        "shape1": (240, 4, 21),
        "shape2": (254, 63, 16),
        "shape3": (245, 150, 39),
        "shape4": (253, 195, 10),
        "shape5": (251, 246, 200),
    },
    "cool": {
        "bg_top": (143, 250, 239),
        "bg_bottom": (4, 193, 226),
        "shape0": (9, 13, 245),
        "shape1": (2, 86, 223),
        "shape2": (5, 144, 252),
        "shape3": (7, 232, 241),
        "shape4": (60, 250, 233),
        "shape5": (225, 254, 227),
    },
    "forest": {
        "bg_top": (198, 255, 69),
        "bg_bottom": (25, 226, 1),
        "shape0": (0, 64, 6),
        "shape1": (12, 118, 32),
        "shape2": (11, 186, 20),
        "shape3": (32, 255, 57),
        "shape4": (115, 255, 63),
        "shape5": (236, 255, 193),
    },
    "mono": {
        "bg_top": (214, 215, 233),
        "bg_bottom": (138, 143, 132),
        "shape0": (45, 37, 27),
        "shape1": (87, 73, 67),
        "shape2": (120, 113, 110),
        "shape3": (171, 164, 161),
        "shape4": (198, 190, 180),
        "shape5": (240, 245, 234),
    },
}

PALETTES = tuple(_PALETTE_TABLE)
_N_SHAPE_ROLES = 6


def palette_colors(name: str) -> dict[str, np.ndarray]:
    """Role → float RGB in [0, 1] for a named palette."""
    if name not in _PALETTE_TABLE:
        raise ConfigurationError(f"unknown palette {name!r}, expected one of {PALETTES}")
    return {role: np.array(rgb, dtype=np.float64) / 255.0 for role, rgb in _PALETTE_TABLE[name].items()}


def _shape_masks(rng: np.random.Generator, size: int) -> list[tuple[np.ndarray, int]]:
    """Random primitives as (mask, color-role index) in draw order."""
    ys, xs = np.mgrid[0:size, 0:size].astype(np.float64)
    n_shapes = int(rng.integers(3, 9))
    out = []
    for _ in range(n_shapes):
        kind = rng.choice(("rect", "triangle", "circle"))
        role = int(rng.integers(0, _N_SHAPE_ROLES))
        if kind == "rect":
            w = int(rng.integers(size // 6, size // 2))
            h = int(rng.integers(size // 6, size // 2))
            x0 = int(rng.integers(0, size - w))
            y0 = int(rng.integers(0, size - h))
            mask = np.zeros((size, size), dtype=bool)
            mask[y0 : y0 + h, x0 : x0 + w] = True
        elif kind == "circle":
            r = int(rng.integers(size // 10, size // 4))
            cx = int(rng.integers(r, size - r))
            cy = int(rng.integers(r, size - r))
            mask = (xs - cx) ** 2 + (ys - cy) ** 2 <= r * r
        else:
            pts = rng.integers(0, size, size=(3, 2)).astype(np.float64)
            # reject degenerate (near-collinear) triangles by re-drawing once
            for _retry in range(8):
                area = abs(
                    (pts[1, 0] - pts[0, 0]) * (pts[2, 1] - pts[0, 1])
                    - (pts[2, 0] - pts[0, 0]) * (pts[1, 1] - pts[0, 1])
                )
                if area >= (size * size) / 16:
                    break
                pts = rng.integers(0, size, size=(3, 2)).astype(np.float64)
            mask = _triangle_mask(pts, xs, ys)
        out.append((mask, role))
    return out


def _triangle_mask(pts: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    def edge(p, q):
        return (q[0] - p[0]) * (ys - p[1]) - (q[1] - p[1]) * (xs - p[0])

    d1, d2, d3 = edge(pts[0], pts[1]), edge(pts[1], pts[2]), edge(pts[2], pts[0])
    neg = (d1 < 0) | (d2 < 0) | (d3 < 0)
    pos = (d1 > 0) | (d2 > 0) | (d3 > 0)
    return ~(neg & pos)


def generate_procedural_scene(seed: int, size: int, palette: str | None = None) -> np.ndarray:
    """Deterministic synthetic scene: 3–8 primitives over a vertical gradient.

    ``palette=None`` picks one of the named palettes from the seed; passing a
    name recolors the same geometry, leaving its luminance structure intact.
    Returns an H×W×3 float32 image in [0, 1].
    """
    if size < 32:
        raise InvalidInputError(f"scene size must be at least 32, got {size}")
    rng = np.random.default_rng(seed)
    if palette is None:
        palette = PALETTES[int(rng.integers(0, len(PALETTES)))]
    else:
        rng.integers(0, len(PALETTES))  # keep the geometry stream aligned
    colors = palette_colors(palette)

    t = (np.arange(size, dtype=np.float64) / (size - 1))[:, None, None]
    img = (1.0 - t) * colors["bg_top"][None, None, :] + t * colors["bg_bottom"][None, None, :]
    img = np.broadcast_to(img, (size, size, 3)).copy()

    for mask, role in _shape_masks(rng, size):
        img[mask] = colors[f"shape{role}"]
    return np.clip(img, 0.0, 1.0).astype(np.float32)
