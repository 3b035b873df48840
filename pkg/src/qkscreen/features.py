"""Standardization, PCA / ANOVA reduction and angle encoding.

All transformers are fitted on training rows only and are immutable
afterwards.  The composed :class:`FeaturePipeline` serializes to JSON.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


class FeatureError(ValueError):
    pass


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] == 0:
        raise FeatureError("expected a non-empty 2-D matrix")
    return X


def _check_columns(X: np.ndarray, expected: int):
    if X.shape[1] != expected:
        raise FeatureError(f"column-count mismatch: expected {expected}, got {X.shape[1]}")


@dataclass(frozen=True)
class Scaler:
    mean: np.ndarray
    std: np.ndarray

    @property
    def constant_columns(self) -> np.ndarray:
        return np.flatnonzero(self.std == 0)


def standardize_fit(X) -> Scaler:
    X = _as_matrix(X)
    return Scaler(X.mean(axis=0), X.std(axis=0))


def standardize_apply(scaler: Scaler, X) -> np.ndarray:
    X = _as_matrix(X)
    _check_columns(X, scaler.mean.size)
    safe = np.where(scaler.std > 0, scaler.std, 1.0)
    out = (X - scaler.mean) / safe
    out[:, scaler.std == 0] = 0.0
    return out


@dataclass(frozen=True)
class PcaModel:
    components: np.ndarray  # (n, n_features), rows orthonormal
    explained_variance: np.ndarray
    mean: np.ndarray

    @property
    def n_components(self) -> int:
        return self.components.shape[0]


def pca_fit(X, n: int) -> PcaModel:
    """Principal axes from the SVD of the centered matrix.

    Explained variances use the ``rows - 1`` denominator, so they equal the
    leading eigenvalues of the sample covariance.  Each component is
    sign-flipped so its largest-magnitude entry is positive.
    """
    X = _as_matrix(X)
    rows, cols = X.shape
    if n < 1 or n > min(rows - 1, cols):
        raise FeatureError(f"n={n} too large for a {rows}x{cols} matrix")
    mean = X.mean(axis=0)
    _, s, vt = np.linalg.svd(X - mean, full_matrices=False)
    comps = vt[:n].copy()
    pivots = np.argmax(np.abs(comps), axis=1)
    signs = np.sign(comps[np.arange(n), pivots])
    comps *= np.where(signs == 0, 1.0, signs)[:, None]
    return PcaModel(comps, s[:n] ** 2 / (rows - 1), mean)


def pca_transform(model: PcaModel, X) -> np.ndarray:
    X = _as_matrix(X)
    _check_columns(X, model.mean.size)
    return (X - model.mean) @ model.components.T


def pca_inverse(model: PcaModel, Z) -> np.ndarray:
    """Map projected rows back to centered feature space."""
    return np.asarray(Z, dtype=float) @ model.components


@dataclass(frozen=True)
class AnovaSelection:
    indices: np.ndarray
    f_scores: np.ndarray


def anova_f_scores(X, y) -> np.ndarray:
    """Two-class one-way ANOVA F per column.

    Zero within-class variance with distinct class means gives ``inf``;
    a column constant overall gives 0.
    """
    X = _as_matrix(X)
    y = np.asarray(y)
    classes = np.unique(y)
    if classes.size != 2:
        raise FeatureError("ANOVA needs exactly two classes")
    groups = [X[y == c] for c in classes]
    if min(g.shape[0] for g in groups) < 2:
        raise FeatureError("each class needs at least 2 members for ANOVA")
    n_total, k = X.shape[0], len(groups)
    grand = X.mean(axis=0)
    ss_between = sum(g.shape[0] * (g.mean(axis=0) - grand) ** 2 for g in groups)
    ss_within = sum(((g - g.mean(axis=0)) ** 2).sum(axis=0) for g in groups)
    ms_between = ss_between / (k - 1)
    ms_within = ss_within / (n_total - k)
    f = np.zeros(X.shape[1])
    finite = ms_within > 0
    f[finite] = ms_between[finite] / ms_within[finite]
    f[~finite & (ms_between > 0)] = np.inf
    return f


def anova_select(X, y, n: int) -> AnovaSelection:
    X = _as_matrix(X)
    if n < 1 or n > X.shape[1]:
        raise FeatureError(f"cannot select {n} of {X.shape[1]} columns")
    f = anova_f_scores(X, y)
    order = np.argsort(-f, kind="stable")  # ties -> lower column index
    return AnovaSelection(order[:n].copy(), f)


@dataclass(frozen=True)
class AngleScaler:
    lo: np.ndarray
    hi: np.ndarray
    top: float = np.pi


def angle_fit(X, top: float = np.pi) -> AngleScaler:
    """Record per-column training min/max for a linear map onto ``[0, top]``."""
    X = _as_matrix(X)
    if not top > 0:
        raise FeatureError("angle interval must have a positive upper end")
    return AngleScaler(X.min(axis=0), X.max(axis=0), float(top))


def angle_apply(scaler: AngleScaler, X) -> np.ndarray:
    X = _as_matrix(X)
    _check_columns(X, scaler.lo.size)
    span = scaler.hi - scaler.lo
    safe = np.where(span > 0, span, 1.0)
    out = np.clip((X - scaler.lo) / safe, 0.0, 1.0) * scaler.top
    out[:, span == 0] = scaler.top / 2
    return out


@dataclass(frozen=True)
class FeaturePipeline:
    """standardize -> (pca | anova) -> angle scale, fitted on training rows.

    ``fit_ids`` records which rows the parameters were estimated from.
    """

    selector: str
    scaler: Scaler
    angles: AngleScaler
    pca: PcaModel | None = None
    anova: AnovaSelection | None = None
    fit_ids: tuple[str, ...] = field(default=(), compare=False)

    @property
    def n_features(self) -> int:
        return self.angles.lo.size

    def reduce(self, X) -> np.ndarray:
        Z = standardize_apply(self.scaler, X)
        if self.selector == "pca":
            return pca_transform(self.pca, Z)
        return Z[:, self.anova.indices]

    def transform(self, X) -> np.ndarray:
        return angle_apply(self.angles, self.reduce(X))

    def to_dict(self) -> dict:
        d = {
            "selector": self.selector,
            "mean": self.scaler.mean.tolist(),
            "std": self.scaler.std.tolist(),
            "min": self.angles.lo.tolist(),
            "max": self.angles.hi.tolist(),
            "angle_top": self.angles.top,
            "fit_ids": list(self.fit_ids),
        }
        if self.pca is not None:
            d["components"] = self.pca.components.tolist()
            d["explained_variance"] = self.pca.explained_variance.tolist()
            d["pca_mean"] = self.pca.mean.tolist()
        if self.anova is not None:
            d["indices"] = self.anova.indices.tolist()
            d["f_scores"] = [float(v) if np.isfinite(v) else "inf" for v in self.anova.f_scores]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "FeaturePipeline":
        arr = lambda key: np.asarray(d[key], dtype=float)  # noqa: E731
        pca = anova = None
        if d["selector"] == "pca":
            pca = PcaModel(arr("components"), arr("explained_variance"), arr("pca_mean"))
        else:
            f = np.array([np.inf if v == "inf" else v for v in d["f_scores"]], dtype=float)
            anova = AnovaSelection(np.asarray(d["indices"], dtype=int), f)
        return cls(
            d["selector"],
            Scaler(arr("mean"), arr("std")),
            AngleScaler(arr("min"), arr("max"), float(d.get("angle_top", np.pi))),
            pca,
            anova,
            tuple(d.get("fit_ids", ())),
        )

    @classmethod
    def from_json(cls, text: str) -> "FeaturePipeline":
        return cls.from_dict(json.loads(text))


def fit_pipeline(X, y, selector: str, n: int, ids=(), angle_range: float = np.pi) -> FeaturePipeline:
    """Fit standardize -> selector -> angle map; angles land in ``[0, angle_range]``."""
    X = _as_matrix(X)
    scaler = standardize_fit(X)
    Z = standardize_apply(scaler, X)
    pca = anova = None
    if selector == "pca":
        pca = pca_fit(Z, n)
        R = pca_transform(pca, Z)
    elif selector == "anova":
        anova = anova_select(Z, y, n)
        R = Z[:, anova.indices]
    else:
        raise FeatureError(f"unknown selector {selector!r}")
    return FeaturePipeline(selector, scaler, angle_fit(R, angle_range), pca, anova, tuple(ids))
