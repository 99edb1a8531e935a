"""Independent reference implementations used to check the package.

Everything here is written with explicit loops or high-precision arithmetic
and must not import computational helpers from the package under test.
"""

from __future__ import annotations

import math

import mpmath
import numpy as np

mpmath.mp.dps = 50


# --- classical edge pipeline, brute force -----------------------------------


def gaussian_kernel_1d(sigma: float, radius: int) -> np.ndarray:
    ks = np.array([math.exp(-0.5 * (k / sigma) ** 2) for k in range(-radius, radius + 1)])
    return ks / ks.sum()


def brute_gaussian_blur(image: np.ndarray, sigma: float, radius: int) -> np.ndarray:
    """2-D convolution with an outer-product Gaussian kernel, replicate borders."""
    k1 = gaussian_kernel_1d(sigma, radius)
    kernel = np.outer(k1, k1)
    h, w = image.shape
    padded = np.pad(image.astype(np.float64), radius, mode="edge")
    out = np.zeros((h, w), dtype=np.float64)
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for dy in range(2 * radius + 1):
                for dx in range(2 * radius + 1):
                    acc += kernel[dy, dx] * padded[y + dy, x + dx]
            out[y, x] = acc
    return out


def brute_gradient(image: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Central differences inside, one-sided at the borders (per axis)."""
    h, w = image.shape
    gy = np.zeros_like(image, dtype=np.float64)
    gx = np.zeros_like(image, dtype=np.float64)
    for y in range(h):
        for x in range(w):
            if 0 < y < h - 1:
                gy[y, x] = (image[y + 1, x] - image[y - 1, x]) / 2.0
            elif y == 0:
                gy[y, x] = image[1, x] - image[0, x]
            else:
                gy[y, x] = image[h - 1, x] - image[h - 2, x]
            if 0 < x < w - 1:
                gx[y, x] = (image[y, x + 1] - image[y, x - 1]) / 2.0
            elif x == 0:
                gx[y, x] = image[y, 1] - image[y, 0]
            else:
                gx[y, x] = image[y, w - 1] - image[y, w - 2]
    return gy, gx


def brute_edge_magnitude(lum: np.ndarray, sigma: float, radius: int) -> np.ndarray:
    blurred = brute_gaussian_blur(lum, sigma, radius)
    gy, gx = brute_gradient(blurred)
    return np.sqrt(gx * gx + gy * gy)


def brute_nonmax(mag: np.ndarray, gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Directional non-maximum suppression with the same 4-way quantization."""
    h, w = mag.shape
    out = np.zeros_like(mag)
    for y in range(h):
        for x in range(w):
            angle = math.degrees(math.atan2(gy[y, x], gx[y, x])) % 180.0
            if angle <= 22.5 or angle > 157.5:
                dy, dx = 0, 1
            elif angle <= 67.5:
                dy, dx = 1, 1
            elif angle <= 112.5:
                dy, dx = 1, 0
            else:
                dy, dx = 1, -1
            keep = True
            for sign in (1, -1):
                ny = min(max(y + sign * dy, 0), h - 1)
                nx = min(max(x + sign * dx, 0), w - 1)
                if (ny, nx) != (y, x) and mag[y, x] < mag[ny, nx]:
                    keep = False
            out[y, x] = mag[y, x] if keep else 0.0
    return out


# --- high-precision scalar loss oracles --------------------------------------


def softplus_mp(x: float) -> mpmath.mpf:
    return mpmath.log(1 + mpmath.exp(-abs(mpmath.mpf(x)))) + max(mpmath.mpf(x), 0)


def generator_loss_mp(logits) -> float:
    acc = mpmath.mpf(0)
    for v in np.asarray(logits).reshape(-1):
        acc += softplus_mp(-float(v))
    return float(acc / len(np.asarray(logits).reshape(-1)))


def discriminator_loss_mp(real_logits, fake_logits) -> float:
    real = np.asarray(real_logits).reshape(-1)
    fake = np.asarray(fake_logits).reshape(-1)
    acc_r = mpmath.mpf(0)
    for v in real:
        acc_r += softplus_mp(-float(v))
    acc_f = mpmath.mpf(0)
    for v in fake:
        acc_f += softplus_mp(float(v))
    return float(acc_r / len(real) + acc_f / len(fake))


def mean_abs_mp(a: np.ndarray, b: np.ndarray) -> float:
    fa = np.asarray(a, dtype=np.float64).reshape(-1)
    fb = np.asarray(b, dtype=np.float64).reshape(-1)
    acc = mpmath.mpf(0)
    for x, y in zip(fa, fb):
        acc += abs(mpmath.mpf(float(x)) - mpmath.mpf(float(y)))
    return float(acc / len(fa))


# --- Fréchet distance between two Gaussians, closed form for diagonals ------


def frechet_diagonal(mu_a, var_a, mu_b, var_b) -> float:
    mu_a, mu_b = np.asarray(mu_a, dtype=np.float64), np.asarray(mu_b, dtype=np.float64)
    var_a, var_b = np.asarray(var_a, dtype=np.float64), np.asarray(var_b, dtype=np.float64)
    mean_term = float(((mu_a - mu_b) ** 2).sum())
    cov_term = float((var_a + var_b - 2.0 * np.sqrt(var_a * var_b)).sum())
    return mean_term + cov_term


# --- finite differences -------------------------------------------------------


def central_difference_grad(fn, tensor, eps: float = 1e-5) -> np.ndarray:
    """Gradient of scalar ``fn`` w.r.t. a float64 torch tensor, elementwise."""
    import torch

    with torch.no_grad():
        flat = tensor.detach().reshape(-1)
        grad = np.zeros(flat.shape[0], dtype=np.float64)
        for i in range(flat.shape[0]):
            orig = flat[i].item()
            flat[i] = orig + eps
            up = float(fn())
            flat[i] = orig - eps
            down = float(fn())
            flat[i] = orig
            grad[i] = (up - down) / (2.0 * eps)
    return grad.reshape(tuple(tensor.shape))


def max_relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-6) -> float:
    analytic = np.asarray(analytic, dtype=np.float64).reshape(-1)
    numeric = np.asarray(numeric, dtype=np.float64).reshape(-1)
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / scale))
