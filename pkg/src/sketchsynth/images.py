"""Image loading, saving, resizing, and color conversions.

Pixel currency throughout the package: float32 numpy arrays in [0, 1],
shaped H×W×3 for color images and H×W for single-channel maps.
"""

from __future__ import annotations

import base64
import io
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import InvalidInputError

# ITU-R BT.601 luma coefficients; palettes in scenes.py are built against these
# so scene structure is independent of the color palette.
LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114], dtype=np.float64)


def to_luminance(image: np.ndarray) -> np.ndarray:
    """Collapse an H×W×3 image to its H×W luma; single-channel passes through."""
    if image.ndim == 2:
        return image.astype(np.float32, copy=False)
    return (image.astype(np.float64) @ LUMA_WEIGHTS).astype(np.float32)


def to_rgb(image: np.ndarray) -> np.ndarray:
    """Replicate a single-channel map to H×W×3; color images pass through."""
    if image.ndim == 3:
        return image
    return np.repeat(image[:, :, None], 3, axis=2)


def resize(image: np.ndarray, height: int, width: int) -> np.ndarray:
    """Bilinear resize to (height, width); exact pass-through when sizes match."""
    if image.shape[0] == height and image.shape[1] == width:
        return image
    mode = "F" if image.ndim == 2 else None
    if image.ndim == 2:
        pil = Image.fromarray(image.astype(np.float32), mode=mode)
        out = pil.resize((width, height), Image.BILINEAR)
        return np.asarray(out, dtype=np.float32)
    channels = [
        np.asarray(
            Image.fromarray(image[:, :, c].astype(np.float32), mode="F").resize(
                (width, height), Image.BILINEAR
            ),
            dtype=np.float32,
        )
        for c in range(image.shape[2])
    ]
    return np.clip(np.stack(channels, axis=2), 0.0, 1.0)


def load_image(path: str | Path) -> np.ndarray:
    """Read a PNG/JPEG file into a float32 [0, 1] array (H×W×3 or H×W)."""
    with Image.open(path) as img:
        if img.mode in ("L", "I;16", "I"):
            arr = np.asarray(img.convert("L"), dtype=np.float32) / 255.0
        else:
            arr = np.asarray(img.convert("RGB"), dtype=np.float32) / 255.0
    return arr


def save_image(image: np.ndarray, path: str | Path) -> None:
    """Write a float [0, 1] array as an 8-bit PNG (grayscale for H×W input)."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    to_pil(image).save(path)


def to_pil(image: np.ndarray) -> Image.Image:
    arr = np.clip(np.asarray(image, dtype=np.float32), 0.0, 1.0)
    data = np.round(arr * 255.0).astype(np.uint8)
    if data.ndim == 2:
        return Image.fromarray(data, mode="L")
    return Image.fromarray(data, mode="RGB")


def encode_png_base64(image: np.ndarray) -> str:
    """Serialize a float image to a base64 PNG string (the wire format)."""
    return base64.b64encode(encode_png_bytes(image)).decode("ascii")


def decode_png_bytes(raw: bytes) -> np.ndarray:
    """Parse PNG/JPEG bytes into a float [0, 1] array."""
    try:
        with Image.open(io.BytesIO(raw)) as img:
            if img.mode == "L":
                return np.asarray(img, dtype=np.float32) / 255.0
            return np.asarray(img.convert("RGB"), dtype=np.float32) / 255.0
    except Exception as exc:
        raise InvalidInputError(f"could not decode image payload: {exc}") from exc


def decode_png_base64(payload: str) -> np.ndarray:
    """Parse a base64 PNG string back into a float [0, 1] array."""
    try:
        raw = base64.b64decode(payload, validate=True)
    except Exception as exc:
        raise InvalidInputError(f"could not decode base64 PNG payload: {exc}") from exc
    return decode_png_bytes(raw)


def encode_png_bytes(image: np.ndarray) -> bytes:
    buf = io.BytesIO()
    to_pil(image).save(buf, format="PNG")
    return buf.getvalue()
