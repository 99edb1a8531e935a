"""Lightweight quality metrics.

These stand in for heavyweight perceptual metrics: reconstruction distance is
mean absolute error plus structural dissimilarity; distribution distance is
the Fréchet distance between Gaussian fits of cheap image features
(downsampled pixels plus color histograms) with a pluggable embedder; the
separability report probes how well content and style codes reveal whether an
input was a photo or a sketch.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg
from skimage.metrics import structural_similarity
from sklearn.linear_model import LogisticRegression

from . import images
from .errors import InvalidInputError
from .models import ModelBundle, image_to_tensor
from .validation import check_same_shape

COV_RIDGE_EPSILON = 1e-6


def recon_distance_parts(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """(mean absolute error, structural dissimilarity) between two images."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    check_same_shape(a, b, names=("a", "b"))
    l1 = float(np.abs(a - b).mean())
    kwargs = {"data_range": 1.0}
    if a.ndim == 3:
        kwargs["channel_axis"] = 2
    ssim = structural_similarity(a, b, **kwargs)
    return l1, float(1.0 - ssim)


def recon_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Composite reconstruction distance: zero iff the images are identical."""
    l1, dssim = recon_distance_parts(a, b)
    return l1 + dssim


def pixel_histogram_features(batch: list[np.ndarray]) -> np.ndarray:
    """Default embedder: 8×8 downsampled pixels plus 8-bin color histograms."""
    rows = []
    for img in batch:
        rgb = images.to_rgb(np.asarray(img, dtype=np.float32))
        small = images.resize(rgb, 8, 8).reshape(-1)
        hists = [
            np.histogram(rgb[:, :, c], bins=8, range=(0.0, 1.0))[0] / rgb[:, :, c].size
            for c in range(3)
        ]
        rows.append(np.concatenate([small, np.concatenate(hists)]))
    return np.asarray(rows, dtype=np.float64)


def _gaussian_fit(features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mu = features.mean(axis=0)
    cov = np.cov(features, rowvar=False)
    cov = np.atleast_2d(cov)
    return mu, cov


def distribution_distance(set_a, set_b, embedder=None) -> float:
    """Fréchet distance between Gaussian fits of embedded image sets.

    Symmetric and nonnegative; zero for identical sets. Degenerate
    covariances are ridge-regularized (epsilon 1e-6) with a warning.
    """
    if len(set_a) < 10 or len(set_b) < 10:
        raise InvalidInputError("distribution distance needs at least 10 images per set")
    embed = embedder or pixel_histogram_features
    mu_a, cov_a = _gaussian_fit(embed(list(set_a)))
    mu_b, cov_b = _gaussian_fit(embed(list(set_b)))

    eye = np.eye(cov_a.shape[0])
    if min(np.linalg.eigvalsh(cov_a).min(), np.linalg.eigvalsh(cov_b).min()) < 1e-10:
        warnings.warn("degenerate covariance; applying ridge regularization", UserWarning)
        cov_a = cov_a + COV_RIDGE_EPSILON * eye
        cov_b = cov_b + COV_RIDGE_EPSILON * eye

    diff = mu_a - mu_b
    sqrt_prod, _ = linalg.sqrtm(cov_a @ cov_b, disp=False)
    if np.iscomplexobj(sqrt_prod):
        sqrt_prod = sqrt_prod.real
    dist = float(diff @ diff + np.trace(cov_a) + np.trace(cov_b) - 2.0 * np.trace(sqrt_prod))
    return max(dist, 0.0)


@dataclass
class SeparabilityReport:
    """Linear-probe domain accuracies plus the raw embeddings used."""

    style_accuracy: float
    content_accuracy: float
    n_photo: int
    n_sketch: int
    embeddings: list[dict]

    def to_dict(self) -> dict:
        return {
            "style_accuracy": self.style_accuracy,
            "content_accuracy": self.content_accuracy,
            "n_photo": self.n_photo,
            "n_sketch": self.n_sketch,
        }


def _probe_accuracy(features: np.ndarray, labels: np.ndarray, seed: int) -> float:
    """Held-out accuracy of a logistic probe with a fixed iteration budget."""
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(labels))
    half = len(labels) // 2
    train, test = order[:half], order[half:]
    mu = features[train].mean(axis=0)
    sd = features[train].std(axis=0) + 1e-8
    z = (features - mu) / sd
    clf = LogisticRegression(max_iter=100, C=1.0)
    clf.fit(z[train], labels[train])
    return float((clf.predict(z[test]) == labels[test]).mean())


def separability_report(
    images_in: list[np.ndarray],
    labels: list[str],
    model: ModelBundle,
    seed: int = 0,
) -> SeparabilityReport:
    """Probe whether style codes separate photos from sketches better than
    content codes do; also exports the raw embeddings for external plotting."""
    if len(images_in) != len(labels):
        raise InvalidInputError("images and labels must align")
    counts = {lab: labels.count(lab) for lab in set(labels)}
    if set(counts) != {"photo", "sketch"}:
        raise InvalidInputError("labels must be 'photo' or 'sketch'")
    if min(counts.values()) < 10:
        raise InvalidInputError("separability probe needs at least 10 images per class")
    if max(counts.values()) > 10 * min(counts.values()):
        warnings.warn("class imbalance exceeds 10:1; probe accuracy may be misleading", UserWarning)

    import torch

    model.encoder.eval()
    styles, contents, rows = [], [], []
    with torch.no_grad():
        for idx, (img, lab) in enumerate(zip(images_in, labels)):
            content, style = model.encoder(image_to_tensor(np.asarray(img, dtype=np.float32)))
            c = content[0].numpy().astype(np.float32).reshape(-1)
            s = style[0].numpy().astype(np.float32)
            contents.append(c)
            styles.append(s)
            rows.append({"id": str(idx), "domain": lab, "style": s, "content": c})

    y = np.array([1 if lab == "photo" else 0 for lab in labels])
    style_acc = _probe_accuracy(np.asarray(styles), y, seed)
    content_acc = _probe_accuracy(np.asarray(contents), y, seed)
    return SeparabilityReport(
        style_accuracy=style_acc,
        content_accuracy=content_acc,
        n_photo=int(counts["photo"]),
        n_sketch=int(counts["sketch"]),
        embeddings=rows,
    )


def export_embeddings_csv(report: SeparabilityReport, path) -> None:
    """Write embeddings as rows of (id, domain, code-type, values)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "domain", "code_type", "values"])
        for row in report.embeddings:
            for code_type in ("style", "content"):
                values = " ".join(f"{v:.6g}" for v in row[code_type])
                writer.writerow([row["id"], row["domain"], code_type, values])


def stroke_recall(edge_out: np.ndarray, edge_in: np.ndarray, tolerance_px: int = 2) -> float:
    """Fraction of input stroke pixels matched by output strokes within a
    pixel tolerance; the content-anchoring score."""
    from skimage.morphology import binary_dilation, disk

    target = np.asarray(edge_in) > 0
    if not target.any():
        return 1.0
    got = np.asarray(edge_out) > 0
    if tolerance_px > 0:
        got = binary_dilation(got, disk(tolerance_px))
    return float((target & got).sum() / target.sum())
