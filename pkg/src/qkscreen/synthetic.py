"""Synthetic descriptor tables for smoke tests and demos."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .dataset import ACTIVE, INACTIVE, LabeledDataset


def two_blobs(
    n_rows: int = 200,
    n_features: int = 16,
    informative: int = 4,
    separation: float = 6.0,
    noise: float = 0.3,
    seed: int = 0,
) -> LabeledDataset:
    """Two Gaussian classes that differ in a low-dimensional subspace.

    Class means sit ``separation`` apart along a random direction inside an
    ``informative``-dimensional latent space with unit variance; the
    remaining directions carry ``noise``-scale variance.  A random rotation
    mixes everything into ``n_features`` observed columns, so the classes
    become separable once the leading principal components are kept.
    """
    rng = np.random.default_rng(seed)
    n_active = n_rows // 2
    labels = np.array([ACTIVE] * n_active + [INACTIVE] * (n_rows - n_active))
    latent = rng.normal(size=(n_rows, n_features))
    latent[:, informative:] *= noise
    direction = rng.normal(size=informative)
    direction /= np.linalg.norm(direction)
    latent[:, :informative] += np.outer(np.where(labels == ACTIVE, 0.5, -0.5) * separation, direction)
    rotation, _ = np.linalg.qr(rng.normal(size=(n_features, n_features)))
    X = latent @ rotation.T + rng.uniform(-5, 5, size=n_features)
    order = rng.permutation(n_rows)
    return LabeledDataset(
        ids=tuple(f"mol{i:04d}" for i in range(n_rows)),
        features=X[order],
        labels=labels[order],
        feature_names=tuple(f"f{j:02d}" for j in range(n_features)),
        source=f"two_blobs(seed={seed})",
    )


def write_csv(ds: LabeledDataset, path: str | Path, label_column: str = "label") -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", *ds.feature_names, label_column])
        for rid, row, lab in zip(ds.ids, ds.features, ds.labels):
            writer.writerow([rid, *(repr(float(v)) for v in row), 1 if lab == ACTIVE else 0])
