"""Labeled molecule tables: CSV ingestion, class balancing and splits."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .smiles import DESCRIPTOR_NAMES, SmilesError, smiles_descriptors

ACTIVE, INACTIVE = 1, -1
DEFAULT_LABEL_MAP = {"1": ACTIVE, "0": INACTIVE}


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class Reject:
    row: int
    record_id: str
    reason: str


@dataclass(frozen=True)
class LabeledDataset:
    ids: tuple[str, ...]
    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...]
    source: str = ""
    rejects: tuple[Reject, ...] = field(default=(), compare=False)

    def __post_init__(self):
        features = np.asarray(self.features, dtype=float)
        labels = np.asarray(self.labels, dtype=int)
        if features.ndim != 2:
            raise DatasetError("features must be a 2-D matrix")
        if not (features.shape[0] == labels.shape[0] == len(self.ids)):
            raise DatasetError("ids, features and labels differ in length")
        if features.shape[1] != len(self.feature_names):
            raise DatasetError("feature_names does not match the column count")
        if not np.isin(labels, (ACTIVE, INACTIVE)).all():
            raise DatasetError("labels must be +1 or -1")
        if not np.isfinite(features).all():
            raise DatasetError("features contain NaN or infinite values")
        features.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "ids", tuple(str(i) for i in self.ids))

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def n_dropped(self) -> int:
        return len(self.rejects)

    @property
    def n_active(self) -> int:
        return int(np.sum(self.labels == ACTIVE))

    @property
    def n_inactive(self) -> int:
        return int(np.sum(self.labels == INACTIVE))

    def subset(self, index: Sequence[int]) -> "LabeledDataset":
        index = np.asarray(index, dtype=int)
        return LabeledDataset(
            ids=tuple(self.ids[i] for i in index),
            features=self.features[index],
            labels=self.labels[index],
            feature_names=self.feature_names,
            source=self.source,
        )

    def select_columns(self, names: Sequence[str]) -> "LabeledDataset":
        cols = [self.feature_names.index(n) for n in names]
        return LabeledDataset(self.ids, self.features[:, cols], self.labels, tuple(names), self.source)


@dataclass(frozen=True)
class BalancePolicy:
    """Class-balancing rule.

    ``mode="auto"`` applies one-to-one downsampling when there are at least
    ``active_threshold`` actives and 1:``padding_ratio`` padding otherwise;
    the two named modes force one rule.
    """

    mode: str = "auto"
    active_threshold: int = 30
    padding_ratio: int = 6
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("auto", "one_to_one_downsample", "one_to_six_padding"):
            raise DatasetError(f"unknown balance mode {self.mode!r}")
        if self.active_threshold <= 0:
            raise DatasetError("active_threshold must be positive")
        if self.padding_ratio <= 0:
            raise DatasetError("padding_ratio must be positive")

    def resolve(self, n_active: int) -> str:
        if self.mode != "auto":
            return self.mode
        return "one_to_one_downsample" if n_active >= self.active_threshold else "one_to_six_padding"


def _parse_float(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError("non-finite value")
    return value


def load_csv(
    path: str | Path,
    label_column: str,
    feature_columns: Sequence[str] | str = "all",
    label_map: dict[str, int] | None = None,
    smiles_column: str | None = None,
    id_column: str | None = "id",
) -> LabeledDataset:
    """Read a header-row CSV into a :class:`LabeledDataset`.

    With ``feature_columns="all"`` every column other than the label, id and
    SMILES columns is used.  If ``smiles_column`` is given, the native
    descriptor columns are computed and appended.  Rows with unparseable or
    non-finite numbers, unknown labels or bad SMILES are dropped and listed
    in ``dataset.rejects``.
    """
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"missing file: {path}")
    label_map = {str(k).strip(): int(v) for k, v in (label_map or DEFAULT_LABEL_MAP).items()}
    if set(label_map.values()) - {ACTIVE, INACTIVE}:
        raise DatasetError("label_map values must be +1 or -1")

    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DatasetError(f"{path}: no header row") from None
        rows = list(reader)

    for col in [label_column] + ([smiles_column] if smiles_column else []):
        if col not in header:
            raise DatasetError(f"missing column: {col}")
    reserved = {label_column, smiles_column, id_column}
    if feature_columns == "all":
        names = [h for h in header if h not in reserved]
    else:
        names = list(feature_columns)
        for col in names:
            if col not in header:
                raise DatasetError(f"missing column: {col}")
    col_index = [header.index(n) for n in names]
    label_index = header.index(label_column)
    id_index = header.index(id_column) if id_column in header else None
    smiles_index = header.index(smiles_column) if smiles_column else None
    out_names = names + (list(DESCRIPTOR_NAMES) if smiles_column else [])

    ids, feats, labels, rejects = [], [], [], []
    for n, row in enumerate(rows, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        rid = row[id_index].strip() if id_index is not None and id_index < len(row) else str(n - 1)
        try:
            if len(row) != len(header):
                raise ValueError(f"expected {len(header)} fields, got {len(row)}")
            raw_label = row[label_index].strip()
            if raw_label not in label_map:
                raise ValueError(f"unmapped label {raw_label!r}")
            values = [_parse_float(row[i]) for i in col_index]
            if smiles_index is not None:
                desc = smiles_descriptors(row[smiles_index])
                values += [desc[k] for k in DESCRIPTOR_NAMES]
        except SmilesError as exc:
            rejects.append(Reject(n, rid, f"smiles: {exc}"))
            continue
        except ValueError as exc:
            rejects.append(Reject(n, rid, str(exc)))
            continue
        ids.append(rid)
        feats.append(values)
        labels.append(label_map[raw_label])

    if len(set(labels)) < 2:
        raise DatasetError(f"{path}: single-class dataset cannot train a binary classifier")
    return LabeledDataset(
        ids=tuple(ids),
        features=np.array(feats, dtype=float).reshape(len(ids), len(out_names)),
        labels=np.array(labels, dtype=int),
        feature_names=tuple(out_names),
        source=str(path),
        rejects=tuple(rejects),
    )


def balance(ds: LabeledDataset, policy: BalancePolicy) -> LabeledDataset:
    """Downsample inactives to 1:1 (or 1:6 for few actives); keep every active."""
    active = np.flatnonzero(ds.labels == ACTIVE)
    inactive = np.flatnonzero(ds.labels == INACTIVE)
    if active.size == 0 or inactive.size == 0:
        raise DatasetError("balance() needs both classes")
    rng = np.random.default_rng(policy.seed)
    if policy.resolve(active.size) == "one_to_one_downsample":
        target = active.size
    else:
        target = policy.padding_ratio * active.size
    if inactive.size > target:
        inactive = np.sort(rng.choice(inactive, size=target, replace=False))
    keep = np.concatenate([active, inactive])
    return ds.subset(rng.permutation(keep))


def _class_indices(labels: np.ndarray) -> list[np.ndarray]:
    return [np.flatnonzero(labels == ACTIVE), np.flatnonzero(labels == INACTIVE)]


def stratified_split(
    ds: LabeledDataset, train_fraction: float = 0.8, seed: int = 0
) -> tuple[LabeledDataset, LabeledDataset]:
    """Per-class shuffle then cut; train gets round-half-up of each class share."""
    if not 0.0 < train_fraction < 1.0:
        raise DatasetError("train_fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    train, test = [], []
    for idx in _class_indices(ds.labels):
        if idx.size < 2:
            raise DatasetError("class too small to split (needs at least 2 rows)")
        idx = rng.permutation(idx)
        n_train = int(math.floor(train_fraction * idx.size + 0.5))
        train.append(idx[:n_train])
        test.append(idx[n_train:])
    return ds.subset(np.concatenate(train)), ds.subset(np.concatenate(test))


def kfold(ds: LabeledDataset | np.ndarray, k: int, seed: int = 0) -> list[tuple[np.ndarray, np.ndarray]]:
    """Stratified k-fold index pairs ``(train, validation)``.

    Accepts a dataset or a bare label vector.
    """
    labels = ds.labels if isinstance(ds, LabeledDataset) else np.asarray(ds)
    if k < 2:
        raise DatasetError("k must be at least 2")
    rng = np.random.default_rng(seed)
    folds: list[list[np.ndarray]] = [[] for _ in range(k)]
    for idx in _class_indices(labels):
        if idx.size < k:
            raise DatasetError(f"k={k} exceeds class size {idx.size}")
        for f, part in enumerate(np.array_split(rng.permutation(idx), k)):
            folds[f].append(part)
    everything = np.arange(labels.size)
    out = []
    for parts in folds:
        val = np.sort(np.concatenate(parts))
        out.append((np.setdiff1d(everything, val), val))
    return out
