"""Input validation helpers.

Every public operation funnels its array arguments through these checks so the
error behavior is uniform: bad values raise :class:`InvalidInputError`, bad
shapes raise :class:`ShapeMismatchError`.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError, ShapeMismatchError

MIN_IMAGE_SIDE = 8


def check_image(image: np.ndarray, *, name: str = "image") -> np.ndarray:
    """Validate an H×W or H×W×C image with values in [0, 1].

    Returns the image as a float32 array (copying only if a cast is needed).
    """
    arr = np.asarray(image)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    if arr.ndim not in (2, 3):
        raise ShapeMismatchError(f"{name}: expected H×W or H×W×C array, got shape {arr.shape}")
    if arr.ndim == 3 and arr.shape[2] != 3:
        raise ShapeMismatchError(f"{name}: expected 1 or 3 channels, got {arr.shape[2]}")
    if arr.shape[0] < MIN_IMAGE_SIDE or arr.shape[1] < MIN_IMAGE_SIDE:
        raise InvalidInputError(
            f"{name}: image must be at least {MIN_IMAGE_SIDE}×{MIN_IMAGE_SIDE}, got {arr.shape[0]}×{arr.shape[1]}"
        )
    arr = arr.astype(np.float32, copy=False)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name}: contains non-finite values")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise InvalidInputError(
            f"{name}: values must lie in [0, 1], got range [{arr.min():.4g}, {arr.max():.4g}]"
        )
    return arr


def check_edge_map(edge: np.ndarray, *, name: str = "edge") -> np.ndarray:
    """Validate a single-channel edge map with values in [0, 1]."""
    arr = check_image(edge, name=name)
    if arr.ndim != 2:
        raise ShapeMismatchError(f"{name}: edge maps are single-channel, got shape {arr.shape}")
    return arr


def check_same_shape(a: np.ndarray, b: np.ndarray, *, names: tuple[str, str] = ("a", "b")) -> None:
    if a.shape != b.shape:
        raise ShapeMismatchError(f"{names[0]} has shape {a.shape} but {names[1]} has shape {b.shape}")


def check_unit_interval(value: float, *, name: str, open_ends: bool = False) -> float:
    value = float(value)
    if open_ends:
        if not (0.0 < value < 1.0):
            raise InvalidInputError(f"{name} must lie strictly in (0, 1), got {value}")
    elif not (0.0 <= value <= 1.0):
        raise InvalidInputError(f"{name} must lie in [0, 1], got {value}")
    return value


def check_positive(value: float, *, name: str) -> float:
    value = float(value)
    if not value > 0:
        raise InvalidInputError(f"{name} must be > 0, got {value}")
    return value
